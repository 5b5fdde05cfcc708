#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

namespace sbd {

/// Number of orientational second moments, and therefore basis images.
inline constexpr int kNumBases = 6;
/// Bases that carry first-order position terms in the recovery model.
inline constexpr int kNumShiftedBases = 3;
/// x-polarized and y-polarized channels, in that order.
inline constexpr int kNumChannels = 2;

enum class Channel : int { XPol = 0, YPol = 1 };

/// Parameters of the built-in three-lobe basis generator.
///
/// Each channel carries three Gaussian lobes placed on a circle around the
/// kernel center. Lobe l responds to the dipole through a real sensitivity
/// vector v_l, so its intensity is (v_l . mu)^2 and the six bases follow
/// from expanding that quadratic form in the second moments. The default
/// vectors are the six axes of an icosahedron, which keeps the moment-to-lobe
/// map well conditioned and the two channels equally bright for an
/// isotropic emitter.
struct BasisGeneratorParams {
  int oversampling = 4;
  double pixel_size_nm = 58.0;
  double sigma_px = 1.0;
  double lobe_radius_px = 2.0;
  /// Kernel side length in camera pixels; 0 picks 2*ceil(radius + 3 sigma) + 1.
  int extent_px = 0;
  std::array<double, 3> x_lobe_angles_deg{90.0, 210.0, 330.0};
  std::array<double, 3> y_lobe_angles_deg{270.0, 30.0, 150.0};
  /// Rows 0..2 belong to x-pol lobes, rows 3..5 to y-pol lobes.
  std::array<std::array<double, 3>, 6> lobe_vectors = default_lobe_vectors();

  static std::array<std::array<double, 3>, 6> default_lobe_vectors();
};

/// Six dual-channel basis images on an oversampled grid plus their central
/// difference derivatives.
///
/// Sub-pixel (c, r) covers [c, c+1) x [r, r+1) in sub-pixel units and the
/// emitter sits at (width/2, height/2). Pixel values are densities per camera
/// pixel: summing a plane and dividing by oversampling^2 gives its energy.
class BasisStack {
 public:
  BasisStack() = default;
  /// planes holds kNumBases * kNumChannels planes, basis-major, channel-minor.
  BasisStack(int oversampling, double pixel_size_nm, int width, int height,
             std::vector<std::vector<double>> planes);

  int oversampling() const noexcept { return oversampling_; }
  double pixel_size_nm() const noexcept { return pixel_size_nm_; }
  double subpixel_nm() const noexcept { return pixel_size_nm_ / oversampling_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  /// j is zero-based: 0 = <mu_x^2>, ..., 5 = <mu_y mu_z>.
  std::span<const double> image(int j, Channel c) const;
  std::span<const double> deriv_x(int j, Channel c) const;
  std::span<const double> deriv_y(int j, Channel c) const;

  /// Integral of both channels in camera-pixel units.
  double energy(int j) const;
  double channel_energy(int j, Channel c) const;

  /// Basis plane interpolated with Keys cubic convolution at a fractional
  /// shift (0 <= fx, fy < 1). The result has size (width+1) x (height+1).
  /// At integer nodes the interpolant reproduces the samples and its slope
  /// equals the central difference stored in deriv_x / deriv_y.
  std::vector<double> shifted_plane(std::span<const double> plane, double fx,
                                    double fy) const;

 private:
  void compute_derivatives();
  static std::size_t plane_index(int j, Channel c);

  int oversampling_ = 1;
  double pixel_size_nm_ = 1.0;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::vector<double>> images_;
  std::vector<std::vector<double>> derivs_x_;
  std::vector<std::vector<double>> derivs_y_;
};

BasisStack generate_synthetic_basis(const BasisGeneratorParams& params);

/// Writes the SMBASIS1 container (text header, blank line, float64 LE planes).
void save_basis(const BasisStack& basis, const std::filesystem::path& path);
BasisStack load_basis(const std::filesystem::path& path);

/// Keys (a = -0.5) cubic convolution weight.
double keys_weight(double t) noexcept;

}  // namespace sbd
