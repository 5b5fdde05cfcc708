#pragma once

#include <array>

#include "sbd/moments.hpp"

namespace sbd {

struct OrientationEstimate {
  double s = 0.0;        ///< eta1 + eta2 + eta3
  SecondMoments M;       ///< projected to PSD with unit trace
  double theta = 0.0;    ///< [0, pi/2]
  double phi = 0.0;      ///< (-pi, pi]
  double gamma = 0.0;    ///< [0, 1]
  double cone_half_angle = 0.0;
  double eigen_gap = 0.0;  ///< lambda_1 - lambda_2 of the projected matrix
  bool indeterminate = false;
};

/// Brightness, physical moments and orientation from six scaled moments.
///
/// The moment matrix is normalized by s, its eigenvalues are clipped at zero
/// and renormalized to unit trace. The leading eigenvector is reported with
/// mu_z >= 0; in-plane dipoles (mu_z = 0) use the representative with
/// phi in (-pi/2, pi/2]. gamma = (3 lambda_max - 1) / 2 clipped to [0, 1].
/// Orientation is flagged indeterminate when the top two eigenvalues are
/// closer than indeterminate_gap. Throws EstimationError when s <= 0.
OrientationEstimate moments_to_orientation(const std::array<double, 6>& eta,
                                           double indeterminate_gap = 1e-3);

}  // namespace sbd
