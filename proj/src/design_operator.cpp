#include "sbd/design_operator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sbd/errors.hpp"

namespace sbd {

namespace {

int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

Position GridGeometry::grid_point(int i) const {
  const int qx = i % grid_width;
  const int qy = i / grid_width;
  return {to_nm_x(grid_x_subpx(qx)), to_nm_y(grid_y_subpx(qy))};
}

bool GridGeometry::contains(const Position& r) const noexcept {
  return std::abs(r.x_nm) < r_max_x_nm() && std::abs(r.y_nm) < r_max_y_nm();
}

int GridGeometry::cell_of(const Position& r) const {
  const int qx = std::clamp(static_cast<int>(std::floor(to_subpx_x(r.x_nm) / step_subpx)), 0,
                            grid_width - 1);
  const int qy = std::clamp(static_cast<int>(std::floor(to_subpx_y(r.y_nm) / step_subpx)), 0,
                            grid_height - 1);
  return qy * grid_width + qx;
}

DesignOperator::DesignOperator(const BasisStack& basis, const GridSpec& spec) : basis_(basis) {
  const int os = basis.oversampling();
  if (spec.width_px < 1 || spec.height_px < 1) {
    throw ConfigError("region must be at least one camera pixel per side");
  }
  const int step = spec.step_subpx == 0 ? os : spec.step_subpx;
  if (step < 1) throw ConfigError("grid step must be positive");
  if (os % step != 0 && step % os != 0) {
    throw ConfigError("grid step of " + std::to_string(step) +
                      " sub-pixels is incommensurate with oversampling " + std::to_string(os));
  }
  if ((spec.width_px * os) % step != 0 || (spec.height_px * os) % step != 0) {
    throw ConfigError("grid step does not tile the region");
  }
  if ((step - basis.width()) % 2 != 0 || (step - basis.height()) % 2 != 0) {
    throw ConfigError("grid points do not fall on integer sub-pixel offsets of the basis "
                      "(grid step and basis size must have equal parity)");
  }

  geom_.image_width = spec.width_px;
  geom_.image_height = spec.height_px;
  geom_.oversampling = os;
  geom_.pixel_size_nm = basis.pixel_size_nm();
  geom_.step_subpx = step;
  geom_.grid_width = spec.width_px * os / step;
  geom_.grid_height = spec.height_px * os / step;

  const int w = basis.width();
  const int h = basis.height();
  kernel_w_ = (w + 2 * (os - 1)) / os;
  kernel_h_ = (h + 2 * (os - 1)) / os;

  auto origins = [&](int count, int bw, std::vector<int>& org, std::vector<int>& phase) {
    org.resize(static_cast<std::size_t>(count));
    phase.resize(static_cast<std::size_t>(count));
    for (int q = 0; q < count; ++q) {
      const int o = ((2 * q + 1) * step - bw) / 2;
      const int p0 = floor_div(o, os);
      org[static_cast<std::size_t>(q)] = p0;
      phase[static_cast<std::size_t>(q)] = o - p0 * os;
    }
  };
  origins(geom_.grid_width, w, origin_x_, phase_x_);
  origins(geom_.grid_height, h, origin_y_, phase_y_);

  const int min_x = *std::min_element(origin_x_.begin(), origin_x_.end());
  const int max_x = *std::max_element(origin_x_.begin(), origin_x_.end()) + kernel_w_;
  const int min_y = *std::min_element(origin_y_.begin(), origin_y_.end());
  const int max_y = *std::max_element(origin_y_.begin(), origin_y_.end()) + kernel_h_;
  pad_left_ = std::max(0, -min_x);
  pad_top_ = std::max(0, -min_y);
  padded_w_ = pad_left_ + std::max(spec.width_px, max_x);
  padded_h_ = pad_top_ + std::max(spec.height_px, max_y);
  for (auto& v : origin_x_) v += pad_left_;
  for (auto& v : origin_y_) v += pad_top_;

  slot_of_phase_.assign(static_cast<std::size_t>(os * os), -1);
  const double inv_area = 1.0 / static_cast<double>(os * os);
  const std::size_t kernel_px = static_cast<std::size_t>(kernel_w_) * kernel_h_;
  for (int py : phase_y_) {
    for (int px : phase_x_) {
      auto& slot = slot_of_phase_[static_cast<std::size_t>(px * os + py)];
      if (slot >= 0) continue;
      slot = static_cast<int>(kernels_.size());
      std::vector<double> k(kernel_px * kNumChannels * kGroupSize, 0.0);
      for (int comp = 0; comp < kGroupSize; ++comp) {
        for (int c = 0; c < kNumChannels; ++c) {
          const auto ch = static_cast<Channel>(c);
          std::span<const double> plane;
          double sign = 1.0;
          if (comp < kNumBases) {
            plane = basis.image(comp, ch);
          } else {
            const int j = (comp - kNumBases) / 2;
            plane = (comp - kNumBases) % 2 == 0 ? basis.deriv_x(j, ch) : basis.deriv_y(j, ch);
            sign = -1.0;
          }
          double* dst = k.data() + (static_cast<std::size_t>(comp) * kNumChannels + c) * kernel_px;
          for (int ky = 0; ky < h; ++ky) {
            const int a = (ky + py) / os;
            for (int kx = 0; kx < w; ++kx) {
              const int b = (kx + px) / os;
              dst[static_cast<std::size_t>(a) * kernel_w_ + b] +=
                  plane[static_cast<std::size_t>(ky) * w + kx];
            }
          }
          for (std::size_t t = 0; t < kernel_px; ++t) dst[t] *= sign * inv_area;
        }
      }
      kernels_.push_back(std::move(k));
    }
  }
}

const double* DesignOperator::kernel(int slot, int comp, int channel) const {
  const std::size_t kernel_px = static_cast<std::size_t>(kernel_w_) * kernel_h_;
  return kernels_[static_cast<std::size_t>(slot)].data() +
         (static_cast<std::size_t>(comp) * kNumChannels + channel) * kernel_px;
}

DesignOperator::Placement DesignOperator::placement(int i) const {
  const int qx = i % geom_.grid_width;
  const int qy = i / geom_.grid_width;
  const int os = geom_.oversampling;
  const int slot = slot_of_phase_[static_cast<std::size_t>(phase_x_[static_cast<std::size_t>(qx)] * os +
                                                            phase_y_[static_cast<std::size_t>(qy)])];
  return {origin_y_[static_cast<std::size_t>(qy)] * padded_w_ + origin_x_[static_cast<std::size_t>(qx)], slot};
}

void DesignOperator::scatter_group(const JointSignal& f, int i, std::vector<double>& padded) const {
  const auto g = f.group(i);
  const Placement pl = placement(i);
  const std::size_t plane = static_cast<std::size_t>(padded_w_) * padded_h_;
  for (int comp = 0; comp < kGroupSize; ++comp) {
    const double v = g[static_cast<std::size_t>(comp)];
    if (v == 0.0) continue;
    for (int c = 0; c < kNumChannels; ++c) {
      const double* k = kernel(pl.slot, comp, c);
      double* base = padded.data() + c * plane + pl.px0;
      for (int r = 0; r < kernel_h_; ++r) {
        double* row = base + static_cast<std::ptrdiff_t>(r) * padded_w_;
        const double* krow = k + static_cast<std::ptrdiff_t>(r) * kernel_w_;
        for (int col = 0; col < kernel_w_; ++col) row[col] += v * krow[col];
      }
    }
  }
}

void DesignOperator::gather_group(const std::vector<double>& padded, int i, JointSignal& out) const {
  auto g = out.group(i);
  const Placement pl = placement(i);
  const std::size_t plane = static_cast<std::size_t>(padded_w_) * padded_h_;
  for (int comp = 0; comp < kGroupSize; ++comp) {
    double acc = 0.0;
    for (int c = 0; c < kNumChannels; ++c) {
      const double* k = kernel(pl.slot, comp, c);
      const double* base = padded.data() + c * plane + pl.px0;
      for (int r = 0; r < kernel_h_; ++r) {
        const double* row = base + static_cast<std::ptrdiff_t>(r) * padded_w_;
        const double* krow = k + static_cast<std::ptrdiff_t>(r) * kernel_w_;
        for (int col = 0; col < kernel_w_; ++col) acc += krow[col] * row[col];
      }
    }
    g[static_cast<std::size_t>(comp)] = acc;
  }
}

std::vector<double> DesignOperator::pad(std::span<const double> image) const {
  if (image.size() != pixel_count()) throw ShapeError("image size does not match operator");
  const std::size_t plane = static_cast<std::size_t>(padded_w_) * padded_h_;
  std::vector<double> padded(plane * kNumChannels, 0.0);
  const int W = geom_.image_width;
  const int H = geom_.image_height;
  for (int c = 0; c < kNumChannels; ++c) {
    for (int r = 0; r < H; ++r) {
      const double* src = image.data() + (static_cast<std::size_t>(c) * H + r) * W;
      double* dst = padded.data() + c * plane +
                    static_cast<std::size_t>(r + pad_top_) * padded_w_ + pad_left_;
      std::copy(src, src + W, dst);
    }
  }
  return padded;
}

void DesignOperator::apply_groups(const JointSignal& f, std::span<const int> groups,
                                  std::span<double> out) const {
  if (f.groups() != grid_size()) throw ShapeError("joint signal does not match the grid");
  if (out.size() != pixel_count()) throw ShapeError("output image size does not match operator");
  const std::size_t plane = static_cast<std::size_t>(padded_w_) * padded_h_;
  std::vector<double> padded(plane * kNumChannels, 0.0);
  for (int i : groups) scatter_group(f, i, padded);
  const int W = geom_.image_width;
  const int H = geom_.image_height;
  for (int c = 0; c < kNumChannels; ++c) {
    for (int r = 0; r < H; ++r) {
      const double* src = padded.data() + c * plane +
                          static_cast<std::size_t>(r + pad_top_) * padded_w_ + pad_left_;
      std::copy(src, src + W, out.data() + (static_cast<std::size_t>(c) * H + r) * W);
    }
  }
}

void DesignOperator::apply(const JointSignal& f, std::span<double> out) const {
  if (f.groups() != grid_size()) throw ShapeError("joint signal does not match the grid");
  std::vector<int> active;
  active.reserve(static_cast<std::size_t>(grid_size()));
  for (int i = 0; i < grid_size(); ++i) {
    if (!f.group_is_zero(i)) active.push_back(i);
  }
  apply_groups(f, active, out);
}

void DesignOperator::adjoint_groups(std::span<const double> image, std::span<const int> groups,
                                    JointSignal& out) const {
  if (out.groups() != grid_size()) out = JointSignal(grid_size());
  const auto padded = pad(image);
  for (int i : groups) gather_group(padded, i, out);
}

void DesignOperator::adjoint(std::span<const double> image, JointSignal& out) const {
  if (out.groups() != grid_size()) out = JointSignal(grid_size());
  const auto padded = pad(image);
  for (int i = 0; i < grid_size(); ++i) gather_group(padded, i, out);
}

std::vector<double> DesignOperator::column(int i, int comp) const {
  JointSignal f(grid_size());
  f.group(i)[static_cast<std::size_t>(comp)] = 1.0;
  std::vector<double> out(pixel_count());
  const int idx[1] = {i};
  apply_groups(f, idx, out);
  return out;
}

double DesignOperator::group_column_norm() const {
  // Kernels are sampled in full, so interior columns share this norm.
  const std::size_t kernel_px = static_cast<std::size_t>(kernel_w_) * kernel_h_;
  const auto& k = kernels_.front();
  double s = 0.0;
  for (std::size_t t = 0; t < kernel_px * kNumChannels * kGroupSize; ++t) s += k[t] * k[t];
  return std::sqrt(s);
}

}  // namespace sbd
