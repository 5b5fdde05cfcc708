#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "helpers.hpp"
#include "sbd/io.hpp"

using namespace sbd;

namespace {

const std::string kCli = SBD_CLI_PATH;

int run(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = kCli + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t data_rows(const std::filesystem::path& table) {
  std::istringstream in(read_text(table));
  std::string line;
  std::size_t n = 0;
  std::getline(in, line);
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

}  // namespace

TEST_CASE("cli: missing subcommand and bad keys are configuration errors") {
  const auto log = test::temp_path("cli_usage.log");
  CHECK(run("", log) == 2);
  CHECK(run("benchmark --set solver.bogus=1", log) == 2);
  CHECK(read_text(log).find("solver.bogus") != std::string::npos);
  CHECK(run("reconstruct", log) == 2);
  CHECK(read_text(log).find("io.input") != std::string::npos);
}

TEST_CASE("cli: empty stack gives an empty table and success") {
  const auto in = test::temp_path("empty.smb");
  const auto out = test::temp_path("empty.csv");
  write_frame_stack(in, std::vector<Frame>{}, 58.0);
  const auto log = test::temp_path("cli_empty.log");
  CHECK(run("reconstruct -i " + in.string() + " -o " + out.string() + " --set camera.width_px=9 --set camera.height_px=9", log) == 0);
  CHECK(read_text(out) == std::string(kLocalizationHeader) + "\n");
}

TEST_CASE("cli: a corrupted frame is skipped with a warning naming it") {
  std::vector<Frame> frames;
  for (int k = 0; k < 10; ++k) {
    Frame f(9, 9, 5.0);
    f.at(Channel::XPol, 4, 4) = 40.0 + k;
    frames.push_back(f);
  }
  frames[5].pixels[7] = -3.0;
  const auto in = test::temp_path("ten.smb");
  const auto out = test::temp_path("ten.csv");
  const auto diag = test::temp_path("ten_diag.csv");
  write_frame_stack(in, frames, 58.0);
  const auto log = test::temp_path("cli_corrupt.log");
  CHECK(run("reconstruct -i " + in.string() + " -o " + out.string() + " --set io.diagnostics=" + diag.string(), log) ==
        3);
  const auto text = read_text(log);
  CHECK(text.find("frame 5") != std::string::npos);
  CHECK(text.find("frame 4 ") == std::string::npos);
  const auto d = read_text(diag);
  std::size_t ok = 0, pos = 0;
  while ((pos = d.find(",ok", pos)) != std::string::npos) {
    ++ok;
    ++pos;
  }
  CHECK(ok == 9);
}

TEST_CASE("cli: simulate and reconstruct are byte-for-byte reproducible") {
  const auto scene = test::temp_path("det_scene.csv");
  {
    std::ofstream s(scene);
    s << "s,x_nm,y_nm,theta_rad,phi_rad,gamma\n2500,10,-20,1.5707963,0.4,0.9\n2000,-200,150,0.8,-1,0.7\n";
  }
  const auto log = test::temp_path("cli_det.log");
  std::string tables[3];
  std::string stacks[2];
  for (int k = 0; k < 3; ++k) {
    const auto stack = test::temp_path("det_" + std::to_string(k) + ".tif");
    const auto table = test::temp_path("det_" + std::to_string(k) + ".csv");
    if (k < 2) {
      REQUIRE(run("simulate --scene " + scene.string() + " -o " + stack.string() + " --seed 17 --set simulate.frames=3",
                  log) == 0);
      stacks[k] = read_text(stack);
    }
    const auto src = test::temp_path("det_0.tif");
    const std::string threads = k == 2 ? " --threads 2" : "";
    REQUIRE(run("reconstruct -i " + src.string() + " -o " + table.string() + threads, log) == 0);
    tables[k] = read_text(table);
  }
  CHECK(!stacks[0].empty());
  CHECK(stacks[0] == stacks[1]);
  CHECK(tables[0] == tables[1]);
  CHECK(tables[0] == tables[2]);
  CHECK(data_rows(test::temp_path("det_0.csv")) == 6);
}

TEST_CASE("cli: benchmark reports metrics as key=value lines") {
  const auto report = test::temp_path("bench.txt");
  const auto log = test::temp_path("cli_bench.log");
  REQUIRE(run("benchmark --set benchmark.experiment=noisy --set benchmark.trials=3 --report " + report.string(), log) ==
          0);
  const auto text = read_text(report);
  CHECK(text.find("experiment=noisy\n") != std::string::npos);
  CHECK(text.find("recall=") != std::string::npos);
  CHECK(text.find("rms_position_nm=") != std::string::npos);
}
