#pragma once

#include <span>
#include <vector>

#include "sbd/design_operator.hpp"
#include "sbd/forward_model.hpp"
#include "sbd/joint_signal.hpp"

namespace sbd {

/// Means below this are clamped inside the logarithm.
inline constexpr double kMeanFloor = 1e-9;

/// sum_i mean_i - g_i log(mean_i). The constant sum_i log(g_i!) is dropped,
/// so values are only comparable for the same g. Means in [0, kMeanFloor)
/// are clamped inside the log; a negative mean at a pixel with g_i > 0
/// throws EvaluationError.
double poisson_nll(std::span<const double> mean, std::span<const double> counts);

/// Negative Poisson log-likelihood of g under mean A F + b.
double neg_log_likelihood(const JointSignal& f, const DesignOperator& op,
                          std::span<const double> counts, const Background& background);

/// A^T (1 - g / (A F + b)), with the same clamping as poisson_nll.
JointSignal nll_gradient(const JointSignal& f, const DesignOperator& op,
                         std::span<const double> counts, const Background& background);

/// R(F) = sum_i ||F_i||_2 over the kGroupSize coefficients of each grid point.
double group_norm(const JointSignal& f);

/// Block soft-thresholding: F_i -> F_i max(0, 1 - t / ||F_i||).
JointSignal prox_group_norm(const JointSignal& f, double threshold);

/// Moreau envelope of lambda R with parameter tau, evaluated through the
/// prox point: lambda R(p) + ||F - p||^2 / (2 tau), p = prox_{tau lambda R}(F).
double moreau_envelope(const JointSignal& f, double tau, double lambda);

/// (F - prox_{tau lambda R}(F)) / tau.
JointSignal moreau_gradient(const JointSignal& f, double tau, double lambda);

/// Euclidean projection of one (eta, zeta_x, zeta_y) triple onto
/// {||zeta|| <= rho eta}.
void project_cone(double& eta, double& zx, double& zy, double rho) noexcept;

/// Projects bases 0..2 of every group onto the cone with half-spacing rho
/// (sub-pixels). Bases 3..5 have no offset slots and stay unconstrained.
JointSignal project_soc(const JointSignal& f, double rho);
void project_soc_inplace(JointSignal& f, double rho);

/// Largest max(0, ||zeta|| - rho eta) / max(1, eta) over all cones.
double cone_residual(const JointSignal& f, double rho);

}  // namespace sbd
