#pragma once

#include <span>
#include <vector>

#include "sbd/basis.hpp"
#include "sbd/joint_signal.hpp"

namespace sbd {

/// Camera region (per channel, in camera pixels) and grid step (sub-pixels).
struct GridSpec {
  int width_px = 0;
  int height_px = 0;
  /// Grid spacing 2*rho in oversampled sub-pixels; 0 selects one camera pixel.
  int step_subpx = 0;
};

/// Continuous position in nanometers relative to the center of the region.
struct Position {
  double x_nm = 0.0;
  double y_nm = 0.0;
};

/// Geometry shared by the operator, the detector and the refinement stage.
struct GridGeometry {
  int image_width = 0;   ///< camera pixels per channel
  int image_height = 0;
  int oversampling = 1;
  double pixel_size_nm = 1.0;
  int step_subpx = 1;
  int grid_width = 0;
  int grid_height = 0;

  int grid_size() const noexcept { return grid_width * grid_height; }
  double rho_subpx() const noexcept { return 0.5 * step_subpx; }
  double subpixel_nm() const noexcept { return pixel_size_nm / oversampling; }
  double rho_nm() const noexcept { return rho_subpx() * subpixel_nm(); }
  double grid_step_nm() const noexcept { return step_subpx * subpixel_nm(); }
  double r_max_x_nm() const noexcept { return 0.5 * image_width * pixel_size_nm; }
  double r_max_y_nm() const noexcept { return 0.5 * image_height * pixel_size_nm; }

  /// Oversampled image coordinates (sub-pixels from the top-left corner).
  double grid_x_subpx(int qx) const noexcept { return (qx + 0.5) * step_subpx; }
  double grid_y_subpx(int qy) const noexcept { return (qy + 0.5) * step_subpx; }
  double to_subpx_x(double x_nm) const noexcept {
    return 0.5 * image_width * oversampling + x_nm / subpixel_nm();
  }
  double to_subpx_y(double y_nm) const noexcept {
    return 0.5 * image_height * oversampling + y_nm / subpixel_nm();
  }
  double to_nm_x(double x_subpx) const noexcept {
    return (x_subpx - 0.5 * image_width * oversampling) * subpixel_nm();
  }
  double to_nm_y(double y_subpx) const noexcept {
    return (y_subpx - 0.5 * image_height * oversampling) * subpixel_nm();
  }
  Position grid_point(int i) const;
  bool contains(const Position& r) const noexcept;
  /// Grid point whose cell [d - rho, d + rho)^2 holds r; clamped to the grid.
  int cell_of(const Position& r) const;
};

/// Pixel-integrated forward operator A F = sum_j Phi^j eta^j - Gx^j zeta_x^j
/// - Gy^j zeta_y^j over a grid of N points, producing both channels (x-pol
/// block first, each row-major).
///
/// Every grid point sits at an integer sub-pixel offset, so each column is a
/// shifted copy of one of at most oversampling^2 precomputed pixel kernels.
/// Immutable after construction; apply and adjoint are reentrant.
class DesignOperator {
 public:
  DesignOperator(const BasisStack& basis, const GridSpec& spec);

  const GridGeometry& geometry() const noexcept { return geom_; }
  const BasisStack& basis() const noexcept { return basis_; }
  int grid_size() const noexcept { return geom_.grid_size(); }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(kNumChannels) * geom_.image_width * geom_.image_height;
  }

  /// out = A F (overwritten). out.size() must equal pixel_count().
  void apply(const JointSignal& f, std::span<double> out) const;
  /// Same, touching only the listed groups of f.
  void apply_groups(const JointSignal& f, std::span<const int> groups, std::span<double> out) const;
  /// out = A^T image for every group.
  void adjoint(std::span<const double> image, JointSignal& out) const;
  /// Adjoint restricted to the listed groups; other groups of out are left untouched.
  void adjoint_groups(std::span<const double> image, std::span<const int> groups,
                      JointSignal& out) const;

  /// Column of A for group i and component comp, as a full image.
  std::vector<double> column(int i, int comp) const;
  /// Frobenius norm of the kGroupSize columns belonging to one grid point.
  double group_column_norm() const;

 private:
  struct Placement {
    int px0;   // padded pixel origin
    int slot;  // kernel index
  };

  const double* kernel(int slot, int comp, int channel) const;
  Placement placement(int i) const;
  void scatter_group(const JointSignal& f, int i, std::vector<double>& padded) const;
  void gather_group(const std::vector<double>& padded, int i, JointSignal& out) const;
  std::vector<double> pad(std::span<const double> image) const;

  BasisStack basis_;
  GridGeometry geom_;
  int kernel_w_ = 0;
  int kernel_h_ = 0;
  int pad_left_ = 0;
  int pad_top_ = 0;
  int padded_w_ = 0;
  int padded_h_ = 0;
  std::vector<int> origin_x_;  // padded pixel origin per grid column
  std::vector<int> origin_y_;
  std::vector<int> phase_x_;
  std::vector<int> phase_y_;
  std::vector<int> slot_of_phase_;  // phase_x * os + phase_y -> slot
  std::vector<std::vector<double>> kernels_;
};

}  // namespace sbd
