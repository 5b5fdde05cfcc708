#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "sbd/basis.hpp"
#include "sbd/design_operator.hpp"
#include "sbd/moments.hpp"

namespace sbd {

struct ConeOrientation {
  double theta = 0.0;  ///< polar angle, rad
  double phi = 0.0;    ///< azimuth, rad
  double gamma = 1.0;  ///< rotational constraint, 0 isotropic .. 1 fixed
};

struct Emitter {
  double s = 0.0;  ///< photons
  Position r;
  std::variant<ConeOrientation, SecondMoments> orientation = ConeOrientation{};

  SecondMoments moments() const;
};

/// Background flux in photons per pixel: one value per frame or a full map.
class Background {
 public:
  Background(double value = 0.0);  // NOLINT(google-explicit-constructor)
  explicit Background(std::vector<double> map);

  bool is_scalar() const noexcept { return map_.empty(); }
  double operator[](std::size_t i) const noexcept { return map_.empty() ? value_ : map_[i]; }
  /// Throws ShapeError when a map does not have n entries.
  void check_size(std::size_t n) const;
  double median() const;
  double min() const;

 private:
  double value_ = 0.0;
  std::vector<double> map_;
};

/// Two concatenated camera channels (x-pol block first), each row-major.
struct Frame {
  int width = 0;   ///< per channel
  int height = 0;
  std::vector<double> pixels;

  Frame() = default;
  Frame(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(2) * w * h, fill) {}

  std::size_t size() const noexcept { return pixels.size(); }
  double& at(Channel c, int row, int col) {
    return pixels[(static_cast<std::size_t>(c) * height + row) * width + col];
  }
  double at(Channel c, int row, int col) const {
    return pixels[(static_cast<std::size_t>(c) * height + row) * width + col];
  }
  double total() const;
  double channel_total(Channel c) const;
};

struct ChannelShift {
  double dx_px = 0.0;
  double dy_px = 0.0;
};

/// Noiseless frame: each emitter contributes s * sum_j m_j B^j shifted to its
/// continuous position (Keys cubic interpolation on the oversampled grid),
/// integrated over camera pixels, plus background. No Taylor expansion is
/// involved, so this is the reference the recovery is judged against.
Frame render_scene(std::span<const Emitter> emitters, const DesignOperator& op,
                   const Background& background);

/// Independent Poisson draws per pixel, reproducible for a given seed.
Frame sample_poisson(const Frame& mean, std::uint64_t seed);

/// Translates the y-pol channel by shift (camera pixels, |component| <= 2)
/// relative to the x-pol channel. Pixels shifted in from outside are zero.
Frame apply_channel_misalignment(const Frame& frame, ChannelShift shift);
/// Same translation applied to the y-pol basis planes; the planes grow to
/// keep the shifted content.
BasisStack apply_channel_misalignment(const BasisStack& basis, ChannelShift shift);

}  // namespace sbd
