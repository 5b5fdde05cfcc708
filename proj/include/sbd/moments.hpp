#pragma once

#include <array>

#include <Eigen/Core>

namespace sbd {

/// Orientational second moments [<mu_x^2>, <mu_y^2>, <mu_z^2>, <mu_x mu_y>,
/// <mu_x mu_z>, <mu_y mu_z>] of one dipole over a camera frame.
struct SecondMoments {
  std::array<double, 6> m{};

  double trace() const noexcept { return m[0] + m[1] + m[2]; }
  Eigen::Matrix3d matrix() const;
  double min_eigenvalue() const;
  static SecondMoments from_matrix(const Eigen::Matrix3d& mat);

  friend bool operator==(const SecondMoments&, const SecondMoments&) = default;
};

/// Unit dipole direction [sin(theta)cos(phi), sin(theta)sin(phi), cos(theta)].
Eigen::Vector3d dipole_direction(double theta, double phi);

/// Moments of a dipole wobbling with rotational constraint gamma:
/// M = gamma * mu mu^T + (1 - gamma)/3 * I. Throws ParameterError unless
/// gamma is in [0, 1].
SecondMoments moments_from_cone(double theta, double phi, double gamma);

/// Rotational constraint of uniform rotation inside a cone of half-angle
/// alpha: gamma = cos(alpha) (1 + cos(alpha)) / 2, alpha in [0, pi/2].
double gamma_from_cone_angle(double alpha);
/// Inverse of gamma_from_cone_angle on [0, 1].
double cone_angle_from_gamma(double gamma);

}  // namespace sbd
