#include "sbd/forward_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "sbd/errors.hpp"

namespace sbd {

namespace {

constexpr double kMaxShiftPx = 2.0;

// Keys interpolation of a w x h plane at continuous node coordinates (u, v).
double interpolate(std::span<const double> plane, int w, int h, double u, double v) {
  const int iu = static_cast<int>(std::floor(u));
  const int iv = static_cast<int>(std::floor(v));
  const double tu = u - iu;
  const double tv = v - iv;
  double acc = 0.0;
  for (int b = -1; b <= 2; ++b) {
    const int r = iv + b;
    if (r < 0 || r >= h) continue;
    const double wv = tv == 0.0 ? (b == 0 ? 1.0 : 0.0) : keys_weight(tv - b);
    if (wv == 0.0) continue;
    double row = 0.0;
    for (int a = -1; a <= 2; ++a) {
      const int c = iu + a;
      if (c < 0 || c >= w) continue;
      const double wu = tu == 0.0 ? (a == 0 ? 1.0 : 0.0) : keys_weight(tu - a);
      row += wu * plane[static_cast<std::size_t>(r) * w + c];
    }
    acc += wv * row;
  }
  return acc;
}

std::vector<double> translate(std::span<const double> plane, int w, int h, int out_w, int out_h,
                              double offset_x, double offset_y) {
  std::vector<double> out(static_cast<std::size_t>(out_w) * out_h, 0.0);
  for (int r = 0; r < out_h; ++r) {
    for (int c = 0; c < out_w; ++c) {
      out[static_cast<std::size_t>(r) * out_w + c] =
          interpolate(plane, w, h, c - offset_x, r - offset_y);
    }
  }
  return out;
}

void check_shift(ChannelShift shift) {
  if (!(std::abs(shift.dx_px) <= kMaxShiftPx && std::abs(shift.dy_px) <= kMaxShiftPx)) {
    throw ParameterError("channel shift must not exceed 2 pixels per axis");
  }
}

}  // namespace

SecondMoments Emitter::moments() const {
  if (const auto* cone = std::get_if<ConeOrientation>(&orientation)) {
    return moments_from_cone(cone->theta, cone->phi, cone->gamma);
  }
  return std::get<SecondMoments>(orientation);
}

Background::Background(double value) : value_(value) {}
Background::Background(std::vector<double> map) : map_(std::move(map)) {
  if (map_.empty()) throw ShapeError("background map is empty");
}

void Background::check_size(std::size_t n) const {
  if (!map_.empty() && map_.size() != n) {
    throw ShapeError("background map has " + std::to_string(map_.size()) + " entries, expected " +
                     std::to_string(n));
  }
}

double Background::median() const {
  if (map_.empty()) return value_;
  std::vector<double> v = map_;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

double Background::min() const {
  if (map_.empty()) return value_;
  return *std::min_element(map_.begin(), map_.end());
}

double Frame::total() const { return std::accumulate(pixels.begin(), pixels.end(), 0.0); }

double Frame::channel_total(Channel c) const {
  const auto n = static_cast<std::ptrdiff_t>(width) * height;
  const auto begin = pixels.begin() + static_cast<std::ptrdiff_t>(c) * n;
  return std::accumulate(begin, begin + n, 0.0);
}

Frame render_scene(std::span<const Emitter> emitters, const DesignOperator& op,
                   const Background& background) {
  const auto& geom = op.geometry();
  const auto& basis = op.basis();
  const int os = geom.oversampling;
  const int cw = geom.image_width * os;
  const int ch = geom.image_height * os;
  const int bw = basis.width();
  const int bh = basis.height();
  background.check_size(op.pixel_count());

  std::vector<std::vector<double>> canvas(kNumChannels,
                                          std::vector<double>(static_cast<std::size_t>(cw) * ch, 0.0));
  std::vector<double> combined(static_cast<std::size_t>(bw) * bh);
  for (std::size_t e = 0; e < emitters.size(); ++e) {
    const Emitter& em = emitters[e];
    if (!(em.s >= 0.0)) throw PlacementError("emitter " + std::to_string(e) + " has negative photons");
    if (!geom.contains(em.r)) {
      throw PlacementError("emitter " + std::to_string(e) + " lies outside the region of interest");
    }
    const SecondMoments m = em.moments();
    const double ox = geom.to_subpx_x(em.r.x_nm) - 0.5 * bw;
    const double oy = geom.to_subpx_y(em.r.y_nm) - 0.5 * bh;
    const double fox = std::floor(ox);
    const double foy = std::floor(oy);
    const int ix = static_cast<int>(fox);
    const int iy = static_cast<int>(foy);
    for (int c = 0; c < kNumChannels; ++c) {
      std::fill(combined.begin(), combined.end(), 0.0);
      for (int j = 0; j < kNumBases; ++j) {
        const double wj = em.s * m.m[static_cast<std::size_t>(j)];
        if (wj == 0.0) continue;
        const auto plane = basis.image(j, static_cast<Channel>(c));
        for (std::size_t t = 0; t < combined.size(); ++t) combined[t] += wj * plane[t];
      }
      const auto shifted = basis.shifted_plane(combined, ox - fox, oy - foy);
      const int sw = bw + 1;
      const int sh = bh + 1;
      auto& dst = canvas[static_cast<std::size_t>(c)];
      for (int r = 0; r < sh; ++r) {
        const int y = iy + r;
        if (y < 0 || y >= ch) continue;
        for (int col = 0; col < sw; ++col) {
          const int x = ix + col;
          if (x < 0 || x >= cw) continue;
          dst[static_cast<std::size_t>(y) * cw + x] += shifted[static_cast<std::size_t>(r) * sw + col];
        }
      }
    }
  }

  Frame frame(geom.image_width, geom.image_height);
  const double inv_area = 1.0 / static_cast<double>(os * os);
  for (int c = 0; c < kNumChannels; ++c) {
    const auto& src = canvas[static_cast<std::size_t>(c)];
    for (int y = 0; y < ch; ++y) {
      for (int x = 0; x < cw; ++x) {
        frame.at(static_cast<Channel>(c), y / os, x / os) += src[static_cast<std::size_t>(y) * cw + x];
      }
    }
  }
  for (std::size_t i = 0; i < frame.size(); ++i) {
    frame.pixels[i] = frame.pixels[i] * inv_area + background[i];
  }
  return frame;
}

Frame sample_poisson(const Frame& mean, std::uint64_t seed) {
  Frame out(mean.width, mean.height);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double mu = mean.pixels[i];
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
      throw DomainError("Poisson mean at pixel " + std::to_string(i) + " is negative or not finite");
    }
    if (mu == 0.0) continue;
    std::poisson_distribution<long long> dist(mu);
    out.pixels[i] = static_cast<double>(dist(rng));
  }
  return out;
}

Frame apply_channel_misalignment(const Frame& frame, ChannelShift shift) {
  check_shift(shift);
  Frame out = frame;
  if (shift.dx_px == 0.0 && shift.dy_px == 0.0) return out;
  const auto n = static_cast<std::size_t>(frame.width) * frame.height;
  const std::span<const double> ypol(frame.pixels.data() + n, n);
  const auto moved = translate(ypol, frame.width, frame.height, frame.width, frame.height,
                               shift.dx_px, shift.dy_px);
  std::copy(moved.begin(), moved.end(), out.pixels.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

BasisStack apply_channel_misalignment(const BasisStack& basis, ChannelShift shift) {
  check_shift(shift);
  const int os = basis.oversampling();
  const double sx = shift.dx_px * os;
  const double sy = shift.dy_px * os;
  const int pad_x = static_cast<int>(std::ceil(std::abs(sx))) + 2;
  const int pad_y = static_cast<int>(std::ceil(std::abs(sy))) + 2;
  const int w = basis.width() + 2 * pad_x;
  const int h = basis.height() + 2 * pad_y;
  std::vector<std::vector<double>> planes;
  planes.reserve(kNumBases * kNumChannels);
  for (int j = 0; j < kNumBases; ++j) {
    planes.push_back(translate(basis.image(j, Channel::XPol), basis.width(), basis.height(), w, h,
                               pad_x, pad_y));
    planes.push_back(translate(basis.image(j, Channel::YPol), basis.width(), basis.height(), w, h,
                               pad_x + sx, pad_y + sy));
  }
  return BasisStack(os, basis.pixel_size_nm(), w, h, std::move(planes));
}

}  // namespace sbd
