#include "sbd/orientation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "sbd/errors.hpp"

namespace sbd {

OrientationEstimate moments_to_orientation(const std::array<double, 6>& eta, double indeterminate_gap) {
  OrientationEstimate out;
  out.s = eta[0] + eta[1] + eta[2];
  if (!(out.s > 0.0) || !std::isfinite(out.s)) {
    throw EstimationError("brightness eta1 + eta2 + eta3 must be positive");
  }
  SecondMoments raw;
  for (std::size_t k = 0; k < 6; ++k) raw.m[k] = eta[k] / out.s;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(raw.matrix());
  Eigen::Vector3d lam = es.eigenvalues().cwiseMax(0.0);
  const double total = lam.sum();
  if (!(total > 0.0)) throw EstimationError("moment matrix has no positive eigenvalue");
  lam /= total;
  const Eigen::Matrix3d& vecs = es.eigenvectors();
  out.M = SecondMoments::from_matrix(vecs * lam.asDiagonal() * vecs.transpose());

  // Eigenvalues ascend, so column 2 is the leading direction.
  Eigen::Vector3d mu = vecs.col(2).normalized();
  constexpr double kPlanar = 1e-14;
  if (mu.z() < -kPlanar || (std::abs(mu.z()) <= kPlanar && (mu.x() < 0.0 || (mu.x() == 0.0 && mu.y() < 0.0)))) {
    mu = -mu;
  }
  out.theta = std::acos(std::clamp(mu.z(), -1.0, 1.0));
  out.phi = std::atan2(mu.y(), mu.x());
  if (out.phi == -std::numbers::pi) out.phi = std::numbers::pi;
  out.gamma = std::clamp(0.5 * (3.0 * lam(2) - 1.0), 0.0, 1.0);
  out.cone_half_angle = cone_angle_from_gamma(out.gamma);
  out.eigen_gap = lam(2) - lam(1);
  out.indeterminate = out.eigen_gap < indeterminate_gap;
  return out;
}

}  // namespace sbd
