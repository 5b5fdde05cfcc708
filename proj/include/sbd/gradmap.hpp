#pragma once

#include <vector>

#include "sbd/design_operator.hpp"
#include "sbd/joint_signal.hpp"

namespace sbd {

/// Per-grid-point convergence map. basis is the zero-based basis index, or
/// -1 for a pooled map.
struct GradMapImage {
  int grid_width = 0;
  int grid_height = 0;
  int basis = -1;
  std::vector<double> values;

  double max() const;
};

/// Photon-weighted convergence scores of basis j before normalization.
///
/// For each grid point i the 3x3 neighborhood contributes eta_n * c_n, where
/// c_i = 1 when the recovered offset of i is shorter than rho/2 and
/// c_n = max(0, cos angle(zeta_n / eta_n, d_i - d_n)) otherwise; neighbors
/// with eta_n <= 0 are skipped. The result is in photons.
GradMapImage gradmap_scores(const JointSignal& f, int j, const GridGeometry& geom);

/// Neighborhood photon weights sum_n eta_n over the same 3x3 windows.
std::vector<double> gradmap_weights(const JointSignal& f, int j, const GridGeometry& geom);

/// GradMap of basis j in [0, 1]: scores divided by the largest neighborhood
/// weight of the image, or by `scale` (clipped to 1) when scale > 0.
GradMapImage gradmap(const JointSignal& f, int j, const GridGeometry& geom, double scale = 0.0);

/// Pointwise mean of three maps; throws ShapeError on mismatched sizes.
GradMapImage pool_gradmaps(const GradMapImage& g1, const GradMapImage& g2, const GradMapImage& g3);

/// Divides by max(largest value, floor) so that maps of empty frames stay
/// small instead of being stretched to 1.
GradMapImage normalize_gradmap(const GradMapImage& g, double floor);

}  // namespace sbd
