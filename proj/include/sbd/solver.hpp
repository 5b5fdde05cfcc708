#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "sbd/design_operator.hpp"
#include "sbd/forward_model.hpp"
#include "sbd/joint_signal.hpp"

namespace sbd {

enum class StepRule { Backtracking, Fixed };

struct SolverConfig {
  /// Regularization weight. Values <= 0 select lambda0 * ||A_group|| / sqrt(median b).
  double lambda = 0.0;
  double lambda0 = 2.0;
  /// Moreau smoothing parameter. Values <= 0 select the inverse of the
  /// estimated likelihood curvature, fixed for the whole solve.
  double tau = 0.0;
  int max_iterations = 2000;
  /// Stop once the relative objective change stays below this for
  /// `patience` consecutive iterations.
  double tolerance = 1e-6;
  int patience = 5;
  StepRule step_rule = StepRule::Backtracking;
  /// Initial (or fixed) step; values <= 0 use the curvature estimate.
  double initial_step = 0.0;
  double backtrack_factor = 0.5;
  /// Step enlargement tried before each backtracking search.
  double step_growth = 1.1;
  Background background = 1.0;

  /// Throws ConfigError describing the first invalid field.
  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double step = 0.0;
  int nonzero_groups = 0;
};

struct DeconvolutionResult {
  /// prox_{tau lambda R} of the final iterate: groups whose norm stays
  /// below tau * lambda are exactly zero.
  JointSignal signal;
  /// The final iterate itself.
  JointSignal iterate;
  std::vector<IterationRecord> history;
  int iterations = 0;
  int restarts = 0;
  bool converged = false;
  double lambda = 0.0;
  double tau = 0.0;
  /// Objective L + E_tau(lambda R) at F = 0 and at the final iterate.
  double initial_objective = 0.0;
  double final_objective = 0.0;
};

/// Called with (iteration, accepted iterate) after every iteration.
using IterateObserver = std::function<void(int, const JointSignal&)>;

/// Smoothed Poisson objective L(F) + E_tau(lambda R)(F) restricted to a set
/// of groups (empty support = all groups). Coefficients of groups outside
/// the support are held at zero.
struct PoissonProblem {
  const DesignOperator* op = nullptr;
  std::span<const double> counts;
  const Background* background = nullptr;
  double lambda = 0.0;
  double tau = 1.0;
  std::vector<int> support;
};

struct ProjectedGradientOptions {
  int max_iterations = 2000;
  double tolerance = 1e-6;
  int patience = 5;
  StepRule step_rule = StepRule::Backtracking;
  double initial_step = 1.0;
  double backtrack_factor = 0.5;
  /// The step is multiplied by this before each line search, letting it
  /// recover after early backtracking.
  double step_growth = 1.1;
  bool accelerate = true;
  /// Iterations without objective decrease before reporting a stall; 0 disables.
  int stall_window = 0;
};

struct ProjectedGradientResult {
  JointSignal x;
  std::vector<IterationRecord> history;
  int iterations = 0;
  int restarts = 0;
  bool converged = false;
  bool stalled = false;
  double initial_objective = 0.0;
  double final_objective = 0.0;
};

/// Accelerated projected gradient with backtracking and function-value
/// restart: the momentum is dropped whenever a step would increase the
/// objective, so accepted objectives never increase. Every accepted iterate
/// is the output of the cone projection.
ProjectedGradientResult minimize_projected(const PoissonProblem& problem, const JointSignal& x0,
                                           const ProjectedGradientOptions& options,
                                           const IterateObserver& observer = {});

/// Smoothed objective value; +inf when a model mean is negative.
double smoothed_objective(const PoissonProblem& problem, const JointSignal& f);

/// Largest eigenvalue of A^T diag(1 / max(g, b, 1)) A by power iteration,
/// restricted to the problem's support. Approximates the likelihood
/// curvature near the solution.
double estimate_curvature(const PoissonProblem& problem, int iterations = 30);

/// Default lambda for an operator and background level.
double default_lambda(const DesignOperator& op, const Background& background, double lambda0);

/// Group-sparse Poisson deconvolution of one frame.
DeconvolutionResult deconvolve(std::span<const double> counts, const DesignOperator& op,
                               const SolverConfig& config, const IterateObserver& observer = {});

/// Groups whose norm exceeds threshold (tau * lambda for a deconvolution).
int count_active_groups(const JointSignal& f, double threshold);

/// Writes "iteration,objective,step,nonzero_groups" rows.
void write_diagnostics(std::ostream& out, std::span<const IterationRecord> history);

}  // namespace sbd
