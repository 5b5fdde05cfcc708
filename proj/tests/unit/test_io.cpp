#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "sbd/config.hpp"
#include "sbd/container.hpp"
#include "sbd/errors.hpp"
#include "sbd/io.hpp"

using namespace sbd;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

template <class F>
std::string format_field(F&& fn) {
  try {
    fn();
  } catch (const FormatError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("basis container round-trips bit for bit") {
  const auto path = test::temp_path("basis.smb");
  save_basis(test::default_basis(), path);
  const auto back = load_basis(path);
  CHECK(back.width() == test::default_basis().width());
  CHECK(back.oversampling() == test::default_basis().oversampling());
  for (int j = 0; j < kNumBases; ++j) {
    const auto a = test::default_basis().image(j, Channel::YPol);
    const auto b = back.image(j, Channel::YPol);
    CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }
}

TEST_CASE("malformed containers name the offending field") {
  const auto path = test::temp_path("bad.smb");
  write_text(path, "NOTMAGIC\n");
  CHECK(format_field([&] { read_container(path); }) == "magic");
  write_text(path, "SMBASIS1\npixel_size_nm=58\noversampling=4\nwidth=3\nheight=3\nchannels=2\nbases=6\n"
                   "frames=1\ndtype=float64\n\n");
  CHECK(format_field([&] { read_container(path); }) == "payload");
  write_text(path, "SMBASIS1\npixel_size_nm=58\noversampling=x\nwidth=3\nheight=3\nchannels=2\nbases=6\n"
                   "frames=1\ndtype=float64\n\n");
  CHECK(format_field([&] { read_container(path); }) == "oversampling");
  ContainerHeader h;
  h.width = 3;
  h.height = 3;
  h.pixel_size_nm = 58.0;
  h.bases = 5;
  write_container(path, h, std::vector<double>(h.plane_size() * h.planes_per_frame(), 1.0));
  CHECK(format_field([&] { load_basis(path); }) == "basis count");
}

TEST_CASE("frame stacks round-trip through both formats") {
  Frame a(4, 3, 0.0), b(4, 3, 0.0);
  for (std::size_t p = 0; p < a.size(); ++p) {
    a.pixels[p] = static_cast<double>(p);
    b.pixels[p] = 2.0 * p + 1.0;
  }
  const std::vector<Frame> frames{a, b};
  for (const char* name : {"stack.tif", "stack.smb"}) {
    const auto path = test::temp_path(name);
    write_frame_stack(path, frames, 58.0);
    const auto s = read_frame_stack(path);
    CHECK(s.width == 4);
    CHECK(s.height == 3);
    CHECK(s.pixel_size_nm == 58.0);
    REQUIRE(s.frames.size() == 2);
    CHECK(s.frames[0]->pixels == a.pixels);
    CHECK(s.frames[1]->pixels == b.pixels);
    CHECK(s.problems.empty());
  }
}

TEST_CASE("invalid frames are reported and skipped, not fatal") {
  Frame good(3, 3, 1.0), bad(3, 3, 1.0);
  bad.pixels[4] = std::nan("");
  const auto path = test::temp_path("mixed.smb");
  write_frame_stack(path, std::vector<Frame>{good, bad, good}, 58.0);
  const auto s = read_frame_stack(path);
  REQUIRE(s.frames.size() == 3);
  CHECK(s.frames[0].has_value());
  CHECK_FALSE(s.frames[1].has_value());
  CHECK(s.frames[2].has_value());
  REQUIRE(s.problems.size() == 1);
  CHECK(s.problems[0].first == 1);

  // Truncated payload: the last frame is incomplete.
  auto bytes = read_text(path);
  write_text(path, bytes.substr(0, bytes.size() - 16));
  const auto t = read_frame_stack(path);
  REQUIRE(t.frames.size() == 3);
  CHECK_FALSE(t.frames[2].has_value());
}

TEST_CASE("scene files accept an optional frame column and reject bad records") {
  const auto path = test::temp_path("scene.csv");
  write_text(path, "# two emitters\ns,x_nm,y_nm,theta_rad,phi_rad,gamma\n1000,1.5,-2,0.5,0.25,0.9\n500,0,0,0,0,0\n");
  const auto scene = read_scene(path);
  REQUIRE(scene.size() == 2);
  CHECK(scene[0].frame == -1);
  CHECK(scene[0].emitter.s == 1000.0);
  CHECK(scene[0].emitter.r.y_nm == -2.0);
  write_scene(path, scene);
  const auto again = read_scene(path);
  CHECK(again[0].emitter.r.x_nm == 1.5);
  write_text(path, "frame,s,x_nm,y_nm,theta_rad,phi_rad,gamma\n0,1,2,3,0,0,1\n1,abc,0,0,0,0,1\n");
  CHECK(format_field([&] { read_scene(path); }) == "record 2");
}

TEST_CASE("localization table round-trips") {
  LocalizationRow row;
  row.frame = 7;
  row.estimate.s = 1234.5;
  row.estimate.r = {-12.25, 40.5};
  row.estimate.eta = {1, 2, 3, 4, 5, 6};
  row.estimate.theta = 0.5;
  row.estimate.phi = -0.25;
  row.estimate.gamma = 0.75;
  row.estimate.flags = kFlagOrientationIndeterminate;
  std::ostringstream out;
  write_localizations(out, std::vector<LocalizationRow>{row});
  CHECK(out.str().rfind(std::string(kLocalizationHeader) + "\n", 0) == 0);
  const auto path = test::temp_path("loc.csv");
  write_text(path, out.str());
  const auto back = read_localizations(path);
  REQUIRE(back.size() == 1);
  CHECK(back[0].frame == 7);
  CHECK(back[0].estimate.r.x_nm == -12.25);
  CHECK(back[0].estimate.eta[5] == 6.0);
  CHECK(back[0].estimate.flags == kFlagOrientationIndeterminate);
}

TEST_CASE("configuration parsing and validation errors name the key") {
  PipelineConfig cfg;
  apply_config_text(cfg, "# comment\n[solver]\nlambda0 = 3.5\n[detect]\nthreshold=0.4\n", "inline");
  CHECK(cfg.analysis.solver.lambda0 == 3.5);
  CHECK(cfg.analysis.detection.threshold == 0.4);
  auto message = [&](const std::string& text) {
    try {
      PipelineConfig c;
      apply_config_text(c, text, "inline");
      c.validate("benchmark");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("<no error>");
  };
  CHECK(message("solver.nonsense = 1\n").find("solver.nonsense") != std::string::npos);
  CHECK(message("solver.max_iterations = many\n").find("solver.max_iterations") != std::string::npos);
  CHECK(message("detect.threshold = 1.5\n").find("detect.threshold") != std::string::npos);
  CHECK(message("background.mode = magic\n").find("background.mode") != std::string::npos);
  CHECK(message("benchmark.experiment = everything\n").find("benchmark.experiment") != std::string::npos);
  PipelineConfig c;
  CHECK_THROWS_AS(c.validate("reconstruct"), ConfigError);
}
