#include "sbd/moments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "sbd/errors.hpp"

namespace sbd {

Eigen::Matrix3d SecondMoments::matrix() const {
  Eigen::Matrix3d mat;
  mat << m[0], m[3], m[4],
         m[3], m[1], m[5],
         m[4], m[5], m[2];
  return mat;
}

double SecondMoments::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

SecondMoments SecondMoments::from_matrix(const Eigen::Matrix3d& mat) {
  return {{mat(0, 0), mat(1, 1), mat(2, 2), mat(0, 1), mat(0, 2), mat(1, 2)}};
}

Eigen::Vector3d dipole_direction(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

SecondMoments moments_from_cone(double theta, double phi, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("gamma must lie in [0, 1]");
  const Eigen::Vector3d mu = dipole_direction(theta, phi);
  const double iso = (1.0 - gamma) / 3.0;
  return {{gamma * mu(0) * mu(0) + iso, gamma * mu(1) * mu(1) + iso, gamma * mu(2) * mu(2) + iso,
           gamma * mu(0) * mu(1), gamma * mu(0) * mu(2), gamma * mu(1) * mu(2)}};
}

double gamma_from_cone_angle(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 0.5 * std::numbers::pi)) {
    throw ParameterError("cone half-angle must lie in [0, pi/2]");
  }
  const double c = std::cos(alpha);
  return 0.5 * c * (1.0 + c);
}

double cone_angle_from_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("gamma must lie in [0, 1]");
  // Positive root of c^2 + c - 2 gamma = 0.
  const double c = 0.5 * (std::sqrt(1.0 + 8.0 * gamma) - 1.0);
  return std::acos(std::clamp(c, 0.0, 1.0));
}

}  // namespace sbd
