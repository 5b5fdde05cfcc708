#include "sbd/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include <tiffio.h>

#include "sbd/errors.hpp"

namespace sbd {

namespace {

constexpr const char* kMagic = "SMBASIS1";

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string num(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double parse_double(const std::string& text, const std::string& field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw FormatError(field, "cannot parse '" + text + "' as a number");
  }
}

int parse_int(const std::string& text, const std::string& field) {
  try {
    std::size_t used = 0;
    const long v = std::stol(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw FormatError(field, "cannot parse '" + text + "' as an integer");
  }
}

double to_little_endian(double v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bits = std::bit_cast<std::uint64_t>(v);
    bits = __builtin_bswap64(bits);
    return std::bit_cast<double>(bits);
  }
}

bool frame_is_valid(std::span<const double> px, std::string& why) {
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (!std::isfinite(px[i])) {
      why = "non-finite pixel at index " + std::to_string(i);
      return false;
    }
    if (px[i] < 0.0) {
      why = "negative pixel at index " + std::to_string(i);
      return false;
    }
  }
  return true;
}

// Column lookup for header-driven CSV tables.
class Columns {
 public:
  Columns(const std::string& header, const std::string& file) : file_(file) {
    const auto names = split_csv(header);
    for (std::size_t i = 0; i < names.size(); ++i) index_[names[i]] = i;
  }
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw FormatError(name, "column missing from " + file_);
    return it->second;
  }
  std::size_t size() const { return index_.size(); }

 private:
  std::string file_;
  std::map<std::string, std::size_t> index_;
};

struct TiffCloser {
  void operator()(TIFF* t) const {
    if (t != nullptr) TIFFClose(t);
  }
};
using TiffPtr = std::unique_ptr<TIFF, TiffCloser>;

void quiet_libtiff() {
  TIFFSetWarningHandler(nullptr);
  TIFFSetErrorHandler(nullptr);
}

std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("path", "cannot open " + path.string());
  return in;
}

}  // namespace

void write_container(const std::filesystem::path& path, const ContainerHeader& h,
                     std::span<const double> data) {
  const std::size_t expected =
      static_cast<std::size_t>(h.frames) * h.planes_per_frame() * h.plane_size();
  if (data.size() != expected) throw ShapeError("container payload does not match its header");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("path", "cannot write " + path.string());
  out << kMagic << '\n'
      << "pixel_size_nm=" << num(h.pixel_size_nm) << '\n'
      << "oversampling=" << h.oversampling << '\n'
      << "width=" << h.width << '\n'
      << "height=" << h.height << '\n'
      << "channels=" << h.channels << '\n'
      << "bases=" << h.bases << '\n'
      << "frames=" << h.frames << '\n'
      << "dtype=float64\n\n";
  std::vector<double> le(data.begin(), data.end());
  for (double& v : le) v = to_little_endian(v);
  out.write(reinterpret_cast<const char*>(le.data()), static_cast<std::streamsize>(le.size() * sizeof(double)));
  if (!out) throw FormatError("path", "write failed for " + path.string());
}

Container read_container(const std::filesystem::path& path, bool allow_truncated) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("path", "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != kMagic) {
    throw FormatError("magic", "expected " + std::string(kMagic) + " header");
  }
  std::map<std::string, std::string> kv;
  bool blank = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) {
      blank = true;
      break;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("header", "line without '=': " + line);
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  if (!blank) throw FormatError("header", "header is not terminated by a blank line");
  const auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(key, "missing header key");
    return it->second;
  };

  Container c;
  auto& h = c.header;
  h.pixel_size_nm = parse_double(need("pixel_size_nm"), "pixel_size_nm");
  h.oversampling = parse_int(need("oversampling"), "oversampling");
  h.width = parse_int(need("width"), "width");
  h.height = parse_int(need("height"), "height");
  h.channels = parse_int(need("channels"), "channels");
  h.bases = parse_int(need("bases"), "bases");
  h.frames = kv.count("frames") ? parse_int(kv["frames"], "frames") : 1;
  if (need("dtype") != "float64") throw FormatError("dtype", "only float64 is supported");
  if (!(h.pixel_size_nm > 0.0)) throw FormatError("pixel_size_nm", "must be positive");
  if (h.oversampling < 1) throw FormatError("oversampling", "must be >= 1");
  if (h.width < 1) throw FormatError("width", "must be >= 1");
  if (h.height < 1) throw FormatError("height", "must be >= 1");
  if (h.channels < 1) throw FormatError("channels", "must be >= 1");
  if (h.bases < 1) throw FormatError("basis count", "must be >= 1");
  if (h.frames < 0) throw FormatError("frames", "must be >= 0");

  const std::size_t per_frame = h.planes_per_frame() * h.plane_size();
  const std::size_t expected = static_cast<std::size_t>(h.frames) * per_frame;
  c.data.resize(expected);
  in.read(reinterpret_cast<char*>(c.data.data()), static_cast<std::streamsize>(expected * sizeof(double)));
  const auto got = static_cast<std::size_t>(in.gcount()) / sizeof(double);
  if (got < expected && !allow_truncated) {
    throw FormatError("payload", "expected " + std::to_string(expected) + " values, found " +
                                     std::to_string(got));
  }
  c.data.resize(got);
  for (double& v : c.data) v = to_little_endian(v);
  c.complete_frames = per_frame == 0 ? h.frames : static_cast<int>(got / per_frame);
  return c;
}

bool is_tiff_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".tif" || ext == ".tiff";
}

void write_frame_stack(const std::filesystem::path& path, std::span<const Frame> frames,
                       double pixel_size_nm) {
  int w = frames.empty() ? 1 : frames.front().width;
  int h = frames.empty() ? 1 : frames.front().height;
  for (const auto& f : frames) {
    if (f.width != w || f.height != h) throw ShapeError("frames in a stack must share their size");
  }
  if (!is_tiff_path(path)) {
    ContainerHeader hdr;
    hdr.pixel_size_nm = pixel_size_nm;
    hdr.oversampling = 1;
    hdr.width = w;
    hdr.height = h;
    hdr.channels = kNumChannels;
    hdr.bases = 1;
    hdr.frames = static_cast<int>(frames.size());
    std::vector<double> data;
    data.reserve(frames.size() * static_cast<std::size_t>(2 * w * h));
    for (const auto& f : frames) data.insert(data.end(), f.pixels.begin(), f.pixels.end());
    write_container(path, hdr, data);
    return;
  }
  quiet_libtiff();
  TiffPtr tif(TIFFOpen(path.c_str(), "w"));
  if (!tif) throw FormatError("path", "cannot write " + path.string());
  const std::string desc = "pixel_size_nm=" + num(pixel_size_nm);
  std::vector<std::uint16_t> row(static_cast<std::size_t>(2 * w));
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Frame& f = frames[k];
    TIFF* t = tif.get();
    TIFFSetField(t, TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(2 * w));
    TIFFSetField(t, TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(h));
    TIFFSetField(t, TIFFTAG_BITSPERSAMPLE, 16);
    TIFFSetField(t, TIFFTAG_SAMPLESPERPIXEL, 1);
    TIFFSetField(t, TIFFTAG_SAMPLEFORMAT, SAMPLEFORMAT_UINT);
    TIFFSetField(t, TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK);
    TIFFSetField(t, TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
    TIFFSetField(t, TIFFTAG_ROWSPERSTRIP, static_cast<std::uint32_t>(h));
    TIFFSetField(t, TIFFTAG_IMAGEDESCRIPTION, desc.c_str());
    if (frames.size() > 1) {
      TIFFSetField(t, TIFFTAG_SUBFILETYPE, FILETYPE_PAGE);
      TIFFSetField(t, TIFFTAG_PAGENUMBER, static_cast<std::uint16_t>(k),
                   static_cast<std::uint16_t>(frames.size()));
    }
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < 2; ++c) {
        for (int x = 0; x < w; ++x) {
          const double v = std::round(f.at(static_cast<Channel>(c), r, x));
          row[static_cast<std::size_t>(c * w + x)] = static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
        }
      }
      if (TIFFWriteScanline(t, row.data(), static_cast<std::uint32_t>(r), 0) < 0) {
        throw FormatError("path", "scanline write failed for " + path.string());
      }
    }
    if (!TIFFWriteDirectory(t)) throw FormatError("path", "cannot finish page " + std::to_string(k));
  }
}

FrameStack read_frame_stack(const std::filesystem::path& path) {
  FrameStack stack;
  if (!std::filesystem::exists(path)) throw FormatError("path", "no such file " + path.string());
  if (!is_tiff_path(path)) {
    Container c = read_container(path, true);
    const auto& h = c.header;
    if (h.channels != kNumChannels) throw FormatError("channels", "frame stacks need 2 channels");
    if (h.bases != 1) throw FormatError("basis count", "frame stacks need bases=1");
    stack.width = h.width;
    stack.height = h.height;
    stack.pixel_size_nm = h.pixel_size_nm;
    const std::size_t n = static_cast<std::size_t>(2) * h.width * h.height;
    for (int f = 0; f < h.frames; ++f) {
      if (f >= c.complete_frames) {
        stack.frames.emplace_back();
        stack.problems.emplace_back(f, "payload truncated");
        continue;
      }
      Frame fr(h.width, h.height);
      std::copy_n(c.data.begin() + static_cast<std::ptrdiff_t>(f * n), n, fr.pixels.begin());
      std::string why;
      if (frame_is_valid(fr.pixels, why)) {
        stack.frames.emplace_back(std::move(fr));
      } else {
        stack.frames.emplace_back();
        stack.problems.emplace_back(f, why);
      }
    }
    return stack;
  }

  quiet_libtiff();
  TiffPtr tif(TIFFOpen(path.c_str(), "r"));
  if (!tif) throw FormatError("path", "cannot open TIFF " + path.string());
  TIFF* t = tif.get();
  int page = 0;
  do {
    std::uint32_t w2 = 0;
    std::uint32_t h = 0;
    std::uint16_t bits = 0;
    std::uint16_t spp = 1;
    std::uint16_t fmt = SAMPLEFORMAT_UINT;
    TIFFGetField(t, TIFFTAG_IMAGEWIDTH, &w2);
    TIFFGetField(t, TIFFTAG_IMAGELENGTH, &h);
    TIFFGetFieldDefaulted(t, TIFFTAG_BITSPERSAMPLE, &bits);
    TIFFGetFieldDefaulted(t, TIFFTAG_SAMPLESPERPIXEL, &spp);
    TIFFGetFieldDefaulted(t, TIFFTAG_SAMPLEFORMAT, &fmt);
    if (page == 0) {
      if (w2 == 0 || w2 % 2 != 0) throw FormatError("width", "TIFF width must hold two equal channels");
      stack.width = static_cast<int>(w2 / 2);
      stack.height = static_cast<int>(h);
      char* desc = nullptr;
      if (TIFFGetField(t, TIFFTAG_IMAGEDESCRIPTION, &desc) && desc != nullptr) {
        const std::string d(desc);
        const auto pos = d.find("pixel_size_nm=");
        if (pos != std::string::npos) stack.pixel_size_nm = std::atof(d.c_str() + pos + 14);
      }
    }
    std::string why;
    const bool shape_ok = static_cast<int>(w2) == 2 * stack.width && static_cast<int>(h) == stack.height;
    const bool type_ok = spp == 1 && ((fmt == SAMPLEFORMAT_UINT && (bits == 8 || bits == 16)) ||
                                      (fmt == SAMPLEFORMAT_IEEEFP && bits == 32));
    if (!shape_ok || !type_ok) {
      stack.frames.emplace_back();
      stack.problems.emplace_back(page, shape_ok ? "unsupported sample type" : "page size differs");
      ++page;
      continue;
    }
    Frame fr(stack.width, stack.height);
    std::vector<unsigned char> buf(static_cast<std::size_t>(TIFFScanlineSize(t)));
    bool ok = true;
    for (std::uint32_t r = 0; r < h && ok; ++r) {
      if (TIFFReadScanline(t, buf.data(), r, 0) < 0) {
        ok = false;
        why = "unreadable scanline " + std::to_string(r);
        break;
      }
      for (std::uint32_t x = 0; x < w2; ++x) {
        double v = 0.0;
        if (bits == 8) {
          v = buf[x];
        } else if (bits == 16) {
          std::uint16_t s;
          std::memcpy(&s, buf.data() + 2 * x, 2);
          v = s;
        } else {
          float s;
          std::memcpy(&s, buf.data() + 4 * x, 4);
          v = s;
        }
        const int c = static_cast<int>(x) / stack.width;
        fr.at(static_cast<Channel>(c), static_cast<int>(r), static_cast<int>(x) % stack.width) = v;
      }
    }
    if (ok) ok = frame_is_valid(fr.pixels, why);
    if (ok) {
      stack.frames.emplace_back(std::move(fr));
    } else {
      stack.frames.emplace_back();
      stack.problems.emplace_back(page, why);
    }
    ++page;
  } while (TIFFReadDirectory(t));
  return stack;
}

std::vector<SceneRecord> read_scene(const std::filesystem::path& path) {
  auto in = open_text(path);
  std::string line;
  std::vector<SceneRecord> out;
  std::optional<Columns> cols;
  int record = 1;  // 1-based data records
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (!cols) {
      cols.emplace(line, path.string());
      for (const char* k : {"s", "x_nm", "y_nm", "theta_rad", "phi_rad", "gamma"}) cols->at(k);
      continue;
    }
    const std::string field = "record " + std::to_string(record);
    const auto cells = split_csv(line);
    if (cells.size() != cols->size()) throw FormatError(field, "expected " + std::to_string(cols->size()) + " columns");
    SceneRecord r;
    r.emitter.s = parse_double(cells[cols->at("s")], field);
    r.emitter.r = {parse_double(cells[cols->at("x_nm")], field), parse_double(cells[cols->at("y_nm")], field)};
    ConeOrientation o{parse_double(cells[cols->at("theta_rad")], field),
                      parse_double(cells[cols->at("phi_rad")], field),
                      parse_double(cells[cols->at("gamma")], field)};
    if (!(r.emitter.s >= 0.0)) throw FormatError(field, "photon count must be >= 0");
    if (!(o.gamma >= 0.0 && o.gamma <= 1.0)) throw FormatError(field, "gamma must lie in [0, 1]");
    r.emitter.orientation = o;
    if (cols->has("frame")) r.frame = parse_int(cells[cols->at("frame")], field);
    out.push_back(r);
    ++record;
  }
  if (!cols) throw FormatError("header", "scene file " + path.string() + " has no header");
  return out;
}

void write_scene(const std::filesystem::path& path, std::span<const SceneRecord> scene) {
  std::ofstream out(path);
  if (!out) throw FormatError("path", "cannot write " + path.string());
  out << "s,x_nm,y_nm,theta_rad,phi_rad,gamma,frame\n";
  for (const auto& r : scene) {
    const auto* o = std::get_if<ConeOrientation>(&r.emitter.orientation);
    if (o == nullptr) throw FormatError("orientation", "scene files store cone orientations only");
    out << num(r.emitter.s) << ',' << num(r.emitter.r.x_nm) << ',' << num(r.emitter.r.y_nm) << ','
        << num(o->theta) << ',' << num(o->phi) << ',' << num(o->gamma) << ',' << r.frame << '\n';
  }
}

void write_truth(std::ostream& out, std::span<const TruthRow> rows) {
  out << "frame_index,x_nm,y_nm,s_photons,theta_rad,phi_rad,gamma\n";
  for (const auto& r : rows) {
    out << r.frame << ',' << num(r.x_nm) << ',' << num(r.y_nm) << ',' << num(r.s) << ','
        << num(r.theta) << ',' << num(r.phi) << ',' << num(r.gamma) << '\n';
  }
}

std::vector<TruthRow> read_truth(const std::filesystem::path& path) {
  auto in = open_text(path);
  std::string line;
  std::optional<Columns> cols;
  std::vector<TruthRow> out;
  int record = 1;  // 1-based data records
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (!cols) {
      cols.emplace(line, path.string());
      continue;
    }
    const std::string field = "record " + std::to_string(record++);
    const auto c = split_csv(line);
    if (c.size() != cols->size()) throw FormatError(field, "wrong column count");
    TruthRow r;
    r.frame = parse_int(c[cols->at("frame_index")], field);
    r.x_nm = parse_double(c[cols->at("x_nm")], field);
    r.y_nm = parse_double(c[cols->at("y_nm")], field);
    r.s = parse_double(c[cols->at("s_photons")], field);
    r.theta = parse_double(c[cols->at("theta_rad")], field);
    r.phi = parse_double(c[cols->at("phi_rad")], field);
    r.gamma = parse_double(c[cols->at("gamma")], field);
    out.push_back(r);
  }
  return out;
}

void write_localizations(std::ostream& out, std::span<const LocalizationRow> rows) {
  out << kLocalizationHeader << '\n';
  for (const auto& row : rows) {
    const auto& e = row.estimate;
    out << row.frame << ',' << num(e.r.x_nm, 10) << ',' << num(e.r.y_nm, 10) << ',' << num(e.s, 10);
    for (double v : e.eta) out << ',' << num(v, 10);
    out << ',' << num(e.theta, 10) << ',' << num(e.phi, 10) << ',' << num(e.gamma, 10) << ','
        << num(e.cone_half_angle, 10) << ',' << num(e.nll, 12) << ',' << e.flags << '\n';
  }
}

std::vector<LocalizationRow> read_localizations(const std::filesystem::path& path) {
  auto in = open_text(path);
  std::string line;
  std::optional<Columns> cols;
  std::vector<LocalizationRow> out;
  int record = 1;  // 1-based data records
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (!cols) {
      cols.emplace(line, path.string());
      continue;
    }
    const std::string field = "record " + std::to_string(record++);
    const auto c = split_csv(line);
    if (c.size() != cols->size()) throw FormatError(field, "wrong column count");
    LocalizationRow r;
    auto& e = r.estimate;
    r.frame = parse_int(c[cols->at("frame_index")], field);
    e.r = {parse_double(c[cols->at("x_nm")], field), parse_double(c[cols->at("y_nm")], field)};
    e.s = parse_double(c[cols->at("s_photons")], field);
    for (int j = 0; j < kNumBases; ++j) {
      e.eta[static_cast<std::size_t>(j)] = parse_double(c[cols->at("eta" + std::to_string(j + 1))], field);
    }
    e.theta = parse_double(c[cols->at("theta_rad")], field);
    e.phi = parse_double(c[cols->at("phi_rad")], field);
    e.gamma = parse_double(c[cols->at("gamma")], field);
    e.cone_half_angle = parse_double(c[cols->at("cone_half_angle_rad")], field);
    e.nll = parse_double(c[cols->at("nll")], field);
    e.flags = static_cast<std::uint32_t>(parse_int(c[cols->at("flags")], field));
    out.push_back(r);
  }
  return out;
}

void write_metrics(std::ostream& out, std::span<const std::pair<std::string, std::string>> metrics) {
  for (const auto& [k, v] : metrics) out << k << '=' << v << '\n';
}

void write_tiff16(const std::filesystem::path& path, int width, int height,
                  std::span<const std::uint16_t> pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * height) throw ShapeError("image size mismatch");
  quiet_libtiff();
  TiffPtr tif(TIFFOpen(path.c_str(), "w"));
  if (!tif) throw FormatError("path", "cannot write " + path.string());
  TIFF* t = tif.get();
  TIFFSetField(t, TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(width));
  TIFFSetField(t, TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(height));
  TIFFSetField(t, TIFFTAG_BITSPERSAMPLE, 16);
  TIFFSetField(t, TIFFTAG_SAMPLESPERPIXEL, 1);
  TIFFSetField(t, TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK);
  TIFFSetField(t, TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
  TIFFSetField(t, TIFFTAG_ROWSPERSTRIP, static_cast<std::uint32_t>(height));
  std::vector<std::uint16_t> row(static_cast<std::size_t>(width));
  for (int r = 0; r < height; ++r) {
    std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>(r) * width, width, row.begin());
    if (TIFFWriteScanline(t, row.data(), static_cast<std::uint32_t>(r), 0) < 0) {
      throw FormatError("path", "scanline write failed for " + path.string());
    }
  }
}

}  // namespace sbd
