#include "sbd/basis.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "sbd/container.hpp"
#include "sbd/errors.hpp"

namespace sbd {

namespace {

// Mass of a unit Gaussian over [a, b) along one axis.
double gaussian_mass(double a, double b, double mean, double sigma) {
  const double s = std::sqrt(2.0) * sigma;
  return 0.5 * (std::erf((b - mean) / s) - std::erf((a - mean) / s));
}

std::array<double, kNumBases> quadratic_weights(const std::array<double, 3>& v) {
  return {v[0] * v[0],       v[1] * v[1],       v[2] * v[2],
          2.0 * v[0] * v[1], 2.0 * v[0] * v[2], 2.0 * v[1] * v[2]};
}

}  // namespace

double keys_weight(double t) noexcept {
  t = std::abs(t);
  if (t < 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
  if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
  return 0.0;
}

std::array<std::array<double, 3>, 6> BasisGeneratorParams::default_lobe_vectors() {
  const double g = std::numbers::phi;
  const double n = std::sqrt(1.0 + g * g);
  return {{{g / n, 0.0, 1.0 / n},
           {g / n, 0.0, -1.0 / n},
           {1.0 / n, g / n, 0.0},
           {-1.0 / n, g / n, 0.0},
           {0.0, 1.0 / n, g / n},
           {0.0, -1.0 / n, g / n}}};
}

BasisStack::BasisStack(int oversampling, double pixel_size_nm, int width, int height,
                       std::vector<std::vector<double>> planes)
    : oversampling_(oversampling),
      pixel_size_nm_(pixel_size_nm),
      width_(width),
      height_(height),
      images_(std::move(planes)) {
  if (oversampling_ < 1) throw ParameterError("oversampling must be >= 1");
  if (!(pixel_size_nm_ > 0.0)) throw ParameterError("pixel_size_nm must be positive");
  if (width_ < 3 || height_ < 3) throw ParameterError("basis planes must be at least 3x3");
  if (images_.size() != static_cast<std::size_t>(kNumBases * kNumChannels)) {
    throw ShapeError("basis stack needs " + std::to_string(kNumBases * kNumChannels) +
                     " planes, got " + std::to_string(images_.size()));
  }
  const auto n = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  for (const auto& p : images_) {
    if (p.size() != n) throw ShapeError("basis plane size does not match width*height");
    for (double v : p) {
      if (!std::isfinite(v)) throw ParameterError("basis plane holds a non-finite value");
    }
  }
  compute_derivatives();
}

std::size_t BasisStack::plane_index(int j, Channel c) {
  if (j < 0 || j >= kNumBases) throw ShapeError("basis index out of range");
  return static_cast<std::size_t>(j * kNumChannels + static_cast<int>(c));
}

std::span<const double> BasisStack::image(int j, Channel c) const {
  return images_[plane_index(j, c)];
}
std::span<const double> BasisStack::deriv_x(int j, Channel c) const {
  return derivs_x_[plane_index(j, c)];
}
std::span<const double> BasisStack::deriv_y(int j, Channel c) const {
  return derivs_y_[plane_index(j, c)];
}

double BasisStack::channel_energy(int j, Channel c) const {
  const auto p = image(j, c);
  return std::accumulate(p.begin(), p.end(), 0.0) /
         static_cast<double>(oversampling_ * oversampling_);
}

double BasisStack::energy(int j) const {
  return channel_energy(j, Channel::XPol) + channel_energy(j, Channel::YPol);
}

void BasisStack::compute_derivatives() {
  const int w = width_;
  const int h = height_;
  derivs_x_.assign(images_.size(), std::vector<double>(images_.front().size()));
  derivs_y_.assign(images_.size(), std::vector<double>(images_.front().size()));
  for (std::size_t p = 0; p < images_.size(); ++p) {
    const auto& im = images_[p];
    auto& dx = derivs_x_[p];
    auto& dy = derivs_y_[p];
    for (int r = 0; r < h; ++r) {
      const double* row = im.data() + static_cast<std::ptrdiff_t>(r) * w;
      double* out = dx.data() + static_cast<std::ptrdiff_t>(r) * w;
      out[0] = row[1] - row[0];
      for (int c = 1; c < w - 1; ++c) out[c] = 0.5 * (row[c + 1] - row[c - 1]);
      out[w - 1] = row[w - 1] - row[w - 2];
    }
    for (int c = 0; c < w; ++c) {
      auto at = [&](int r) { return im[static_cast<std::size_t>(r) * w + c]; };
      dy[static_cast<std::size_t>(c)] = at(1) - at(0);
      for (int r = 1; r < h - 1; ++r) {
        dy[static_cast<std::size_t>(r) * w + c] = 0.5 * (at(r + 1) - at(r - 1));
      }
      dy[static_cast<std::size_t>(h - 1) * w + c] = at(h - 1) - at(h - 2);
    }
  }
}

std::vector<double> BasisStack::shifted_plane(std::span<const double> plane, double fx,
                                              double fy) const {
  const int w = width_;
  const int h = height_;
  const int ow = w + 1;
  const int oh = h + 1;
  auto sample = [&](int c, int r) -> double {
    if (c < 0 || c >= w || r < 0 || r >= h) return 0.0;
    return plane[static_cast<std::size_t>(r) * w + c];
  };
  // Output node c' holds the interpolant at c' - f. For f > 0 that lies in
  // [c'-1, c'), so the taps are c'-2 .. c'+1 with local coordinate 1 - f.
  std::array<double, 4> wx{};
  std::array<double, 4> wy{};
  const bool ix = fx > 0.0;
  const bool iy = fy > 0.0;
  if (ix) {
    const double t = 1.0 - fx;
    for (int k = 0; k < 4; ++k) wx[k] = keys_weight(t - (k - 1));
  }
  if (iy) {
    const double t = 1.0 - fy;
    for (int k = 0; k < 4; ++k) wy[k] = keys_weight(t - (k - 1));
  }
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h, 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < ow; ++c) {
      double v;
      if (!ix) {
        v = sample(c, r);
      } else {
        const int base = c - 2;
        v = 0.0;
        for (int k = 0; k < 4; ++k) v += wx[k] * sample(base + k, r);
      }
      tmp[static_cast<std::size_t>(r) * ow + c] = v;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh, 0.0);
  auto tsample = [&](int c, int r) -> double {
    if (r < 0 || r >= h) return 0.0;
    return tmp[static_cast<std::size_t>(r) * ow + c];
  };
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      double v;
      if (!iy) {
        v = tsample(c, r);
      } else {
        const int base = r - 2;
        v = 0.0;
        for (int k = 0; k < 4; ++k) v += wy[k] * tsample(c, base + k);
      }
      out[static_cast<std::size_t>(r) * ow + c] = v;
    }
  }
  return out;
}

BasisStack generate_synthetic_basis(const BasisGeneratorParams& p) {
  if (p.oversampling < 1) throw ParameterError("oversampling must be >= 1");
  if (!(p.sigma_px > 0.0)) throw ParameterError("sigma_px must be positive");
  if (!(p.pixel_size_nm > 0.0)) throw ParameterError("pixel_size_nm must be positive");
  if (p.lobe_radius_px < 0.0) throw ParameterError("lobe_radius_px must be >= 0");
  int extent = p.extent_px;
  if (extent == 0) {
    extent = 2 * static_cast<int>(std::ceil(p.lobe_radius_px + 3.0 * p.sigma_px)) + 1;
  }
  if (extent <= 0) throw ParameterError("extent_px must be positive");
  if (extent < 6.0 * p.sigma_px) {
    throw ParameterError("extent_px must cover at least 6 sigma_px");
  }

  const int os = p.oversampling;
  const int w = extent * os;
  const int h = extent * os;
  const double sigma = p.sigma_px * os;
  const double radius = p.lobe_radius_px * os;
  const double cx0 = 0.5 * w;
  const double cy0 = 0.5 * h;
  const auto npix = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);

  double norm = 0.0;
  for (const auto& v : p.lobe_vectors) norm += v[0] * v[0];
  if (!(norm > 0.0)) throw ParameterError("lobe vectors give zero <mu_x^2> energy");

  std::vector<std::vector<double>> planes(kNumBases * kNumChannels,
                                          std::vector<double>(npix, 0.0));
  for (int c = 0; c < kNumChannels; ++c) {
    const auto& angles = c == 0 ? p.x_lobe_angles_deg : p.y_lobe_angles_deg;
    for (int l = 0; l < 3; ++l) {
      const double a = angles[static_cast<std::size_t>(l)] * std::numbers::pi / 180.0;
      const double mx = cx0 + radius * std::cos(a);
      const double my = cy0 - radius * std::sin(a);
      std::vector<double> mass_x(static_cast<std::size_t>(w));
      std::vector<double> mass_y(static_cast<std::size_t>(h));
      for (int i = 0; i < w; ++i) mass_x[static_cast<std::size_t>(i)] = gaussian_mass(i, i + 1, mx, sigma);
      for (int i = 0; i < h; ++i) mass_y[static_cast<std::size_t>(i)] = gaussian_mass(i, i + 1, my, sigma);
      const double total = std::accumulate(mass_x.begin(), mass_x.end(), 0.0) *
                           std::accumulate(mass_y.begin(), mass_y.end(), 0.0);
      const auto q = quadratic_weights(p.lobe_vectors[static_cast<std::size_t>(3 * c + l)]);
      // Lobe renormalized after truncation so its energy is exactly one.
      const double scale = static_cast<double>(os * os) / (total * norm);
      for (int j = 0; j < kNumBases; ++j) {
        if (q[static_cast<std::size_t>(j)] == 0.0) continue;
        auto& plane = planes[static_cast<std::size_t>(j * kNumChannels + c)];
        const double wj = q[static_cast<std::size_t>(j)] * scale;
        for (int r = 0; r < h; ++r) {
          for (int col = 0; col < w; ++col) {
            plane[static_cast<std::size_t>(r) * w + col] +=
                wj * mass_y[static_cast<std::size_t>(r)] * mass_x[static_cast<std::size_t>(col)];
          }
        }
      }
    }
  }
  return BasisStack(os, p.pixel_size_nm, w, h, std::move(planes));
}

void save_basis(const BasisStack& basis, const std::filesystem::path& path) {
  ContainerHeader hdr;
  hdr.pixel_size_nm = basis.pixel_size_nm();
  hdr.oversampling = basis.oversampling();
  hdr.width = basis.width();
  hdr.height = basis.height();
  hdr.channels = kNumChannels;
  hdr.bases = kNumBases;
  hdr.frames = 1;
  std::vector<double> data;
  data.reserve(hdr.plane_size() * hdr.planes_per_frame());
  for (int j = 0; j < kNumBases; ++j) {
    for (int c = 0; c < kNumChannels; ++c) {
      const auto p = basis.image(j, static_cast<Channel>(c));
      data.insert(data.end(), p.begin(), p.end());
    }
  }
  write_container(path, hdr, data);
}

BasisStack load_basis(const std::filesystem::path& path) {
  Container ct = read_container(path);
  const auto& hdr = ct.header;
  if (hdr.channels != kNumChannels) {
    throw FormatError("channels", "expected 2 channels, got " + std::to_string(hdr.channels));
  }
  if (hdr.bases != kNumBases) {
    throw FormatError("basis count", "expected 6 basis planes, got " + std::to_string(hdr.bases));
  }
  if (hdr.frames != 1) throw FormatError("frames", "basis file must hold exactly one frame");
  const std::size_t n = hdr.plane_size();
  std::vector<std::vector<double>> planes;
  planes.reserve(hdr.planes_per_frame());
  for (std::size_t k = 0; k < hdr.planes_per_frame(); ++k) {
    planes.emplace_back(ct.data.begin() + static_cast<std::ptrdiff_t>(k * n),
                        ct.data.begin() + static_cast<std::ptrdiff_t>((k + 1) * n));
  }
  return BasisStack(hdr.oversampling, hdr.pixel_size_nm, hdr.width, hdr.height,
                    std::move(planes));
}

}  // namespace sbd
