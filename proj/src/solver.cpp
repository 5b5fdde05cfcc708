#include "sbd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "sbd/errors.hpp"
#include "sbd/objective.hpp"

namespace sbd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shared evaluation of the smoothed objective on a support set.
class Evaluator {
 public:
  explicit Evaluator(const PoissonProblem& p) : p_(p) {
    if (p.op == nullptr || p.background == nullptr) throw ConfigError("problem is incomplete");
    if (p.counts.size() != p.op->pixel_count()) throw ShapeError("frame does not match operator");
    p.background->check_size(p.op->pixel_count());
    if (p.support.empty()) {
      support_.resize(static_cast<std::size_t>(p.op->grid_size()));
      std::iota(support_.begin(), support_.end(), 0);
    } else {
      support_ = p.support;
      for (int i : support_) {
        if (i < 0 || i >= p.op->grid_size()) throw ShapeError("support index out of range");
      }
    }
    threshold_ = p.tau * p.lambda;
  }

  const std::vector<int>& support() const { return support_; }
  std::size_t pixels() const { return p_.op->pixel_count(); }
  double active_threshold() const { return threshold_; }

  void model(const JointSignal& x, std::vector<double>& ax) const {
    ax.resize(pixels());
    p_.op->apply_groups(x, support_, ax);
  }

  double value(const JointSignal& x, const std::vector<double>& ax) const {
    double acc = 0.0;
    const auto& bg = *p_.background;
    for (std::size_t i = 0; i < ax.size(); ++i) {
      const double mu = ax[i] + bg[i];
      if (!(mu >= 0.0)) return kInf;
      const double g = p_.counts[i];
      acc += g > 0.0 ? mu - g * std::log(std::max(mu, kMeanFloor)) : mu;
    }
    if (p_.lambda > 0.0) {
      for (int i : support_) {
        const double r = norm(x.group(i));
        acc += r <= threshold_ ? r * r / (2.0 * p_.tau)
                               : p_.lambda * r - 0.5 * p_.tau * p_.lambda * p_.lambda;
      }
    }
    return acc;
  }

  void gradient(const JointSignal& x, const std::vector<double>& ax, JointSignal& grad) const {
    std::vector<double> w(ax.size());
    const auto& bg = *p_.background;
    for (std::size_t i = 0; i < ax.size(); ++i) {
      const double mu = ax[i] + bg[i];
      const double g = p_.counts[i];
      w[i] = (g > 0.0 && mu >= kMeanFloor) ? 1.0 - g / mu : 1.0;
    }
    p_.op->adjoint_groups(w, support_, grad);
    if (p_.lambda > 0.0) {
      for (int i : support_) {
        const auto v = x.group(i);
        auto gi = grad.group(i);
        const double r = norm(v);
        const double scale = r <= threshold_ ? 1.0 / p_.tau : p_.lambda / r;
        for (int k = 0; k < kGroupSize; ++k) gi[static_cast<std::size_t>(k)] += scale * v[static_cast<std::size_t>(k)];
      }
    }
  }

  int active_groups(const JointSignal& x) const {
    int n = 0;
    for (int i : support_) {
      if (norm(x.group(i)) > threshold_) ++n;
    }
    return n;
  }

  void restrict(JointSignal& x) const {
    if (p_.support.empty()) return;
    std::vector<char> keep(static_cast<std::size_t>(x.groups()), 0);
    for (int i : support_) keep[static_cast<std::size_t>(i)] = 1;
    for (int i = 0; i < x.groups(); ++i) {
      if (!keep[static_cast<std::size_t>(i)]) {
        for (double& v : x.group(i)) v = 0.0;
      }
    }
  }

  void project(JointSignal& x) const {
    const double rho = p_.op->geometry().rho_subpx();
    for (int i : support_) {
      for (int j = 0; j < kNumShiftedBases; ++j) {
        project_cone(x.eta(i, j), x.zeta_x(i, j), x.zeta_y(i, j), rho);
      }
    }
  }

 private:
  static double norm(std::span<const double> g) {
    double s = 0.0;
    for (double v : g) s += v * v;
    return std::sqrt(s);
  }

  const PoissonProblem& p_;
  std::vector<int> support_;
  double threshold_ = 0.0;
};

}  // namespace

void SolverConfig::validate() const {
  if (!std::isfinite(lambda)) throw ConfigError("solver.lambda must be finite");
  if (lambda <= 0.0 && !(lambda0 > 0.0)) throw ConfigError("solver.lambda0 must be positive");
  if (!std::isfinite(tau)) throw ConfigError("solver.tau must be finite");
  if (max_iterations < 1) throw ConfigError("solver.max_iterations must be >= 1");
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw ConfigError("solver.tolerance must lie in (0, 1)");
  if (patience < 1) throw ConfigError("solver.patience must be >= 1");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
    throw ConfigError("solver.backtrack_factor must lie in (0, 1)");
  }
  if (!(step_growth >= 1.0)) throw ConfigError("solver.step_growth must be >= 1");
  if (step_rule == StepRule::Fixed && !(initial_step > 0.0)) {
    throw ConfigError("solver.initial_step must be positive for the fixed step rule");
  }
  if (background.min() < 0.0) throw ConfigError("background must be nonnegative");
}

double smoothed_objective(const PoissonProblem& problem, const JointSignal& f) {
  Evaluator ev(problem);
  std::vector<double> ax;
  ev.model(f, ax);
  return ev.value(f, ax);
}

ProjectedGradientResult minimize_projected(const PoissonProblem& problem, const JointSignal& x0,
                                           const ProjectedGradientOptions& opt,
                                           const IterateObserver& observer) {
  Evaluator ev(problem);
  const int n = problem.op->grid_size();
  if (x0.groups() != n) throw ShapeError("initial point does not match the grid");
  if (!(opt.initial_step > 0.0)) throw ConfigError("initial step must be positive");

  ProjectedGradientResult res;
  JointSignal x = x0;
  ev.restrict(x);
  ev.project(x);
  std::vector<double> ax;
  ev.model(x, ax);
  double fx = ev.value(x, ax);
  // F = 0 is always feasible for b >= 0, so shrink an infeasible start toward it.
  for (int shrink = 0; !std::isfinite(fx) && !std::isnan(fx) && shrink < 60; ++shrink) {
    for (double& v : x.values()) v *= 0.5;
    for (double& v : ax) v *= 0.5;
    fx = ev.value(x, ax);
  }
  if (!std::isfinite(fx)) throw SolverError(0, "objective is not finite at the initial point");
  res.initial_objective = fx;

  JointSignal x_prev = x;
  std::vector<double> ax_prev = ax;
  JointSignal y = x;
  std::vector<double> ay = ax;
  double fy = fx;
  bool extrapolated = false;
  double theta = 1.0;
  double t = opt.initial_step;
  JointSignal grad(n);
  JointSignal x_new(n);
  std::vector<double> ax_new;
  int small_changes = 0;
  int since_improvement = 0;
  const auto& support = ev.support();

  for (int k = 1; k <= opt.max_iterations; ++k) {
    res.iterations = k;
    ev.gradient(y, ay, grad);
    if (opt.step_rule == StepRule::Backtracking) t *= opt.step_growth;
    double f_new = kInf;
    for (int bt = 0;; ++bt) {
      for (int i : support) {
        const auto yi = y.group(i);
        const auto gi = grad.group(i);
        auto xi = x_new.group(i);
        for (int c = 0; c < kGroupSize; ++c) {
          xi[static_cast<std::size_t>(c)] = yi[static_cast<std::size_t>(c)] - t * gi[static_cast<std::size_t>(c)];
        }
      }
      ev.project(x_new);
      ev.model(x_new, ax_new);
      f_new = ev.value(x_new, ax_new);
      if (std::isnan(f_new)) throw SolverError(k, "objective is NaN");
      if (opt.step_rule == StepRule::Fixed) {
        if (!std::isfinite(f_new)) throw SolverError(k, "objective diverged under the fixed step");
        break;
      }
      if (std::isfinite(f_new)) {
        double lin = 0.0;
        double quad = 0.0;
        for (int i : support) {
          const auto a = x_new.group(i);
          const auto b = y.group(i);
          const auto gi = grad.group(i);
          for (int c = 0; c < kGroupSize; ++c) {
            const double d = a[static_cast<std::size_t>(c)] - b[static_cast<std::size_t>(c)];
            lin += gi[static_cast<std::size_t>(c)] * d;
            quad += d * d;
          }
        }
        const double bound = fy + lin + quad / (2.0 * t);
        if (f_new <= bound + 1e-12 * std::max(1.0, std::abs(fy))) break;
      }
      t *= opt.backtrack_factor;
      if (bt > 80) throw SolverError(k, "line search failed to find a descent step");
    }

    auto record = [&](double value) {
      res.history.push_back({k, value, t, ev.active_groups(x)});
      if (observer) observer(k, x);
    };

    if (f_new > fx) {
      if (extrapolated) {
        // Momentum overshot: restart from the last accepted iterate.
        y = x;
        ay = ax;
        fy = fx;
        theta = 1.0;
        extrapolated = false;
        ++res.restarts;
        record(fx);
        continue;
      }
      // A plain gradient step made no progress: rounding floor reached.
      record(fx);
      ++since_improvement;
      if (++small_changes >= opt.patience) {
        res.converged = true;
        break;
      }
      if (opt.stall_window > 0 && since_improvement >= opt.stall_window) {
        res.stalled = true;
        break;
      }
      continue;
    }

    std::swap(x_prev, x);
    std::swap(ax_prev, ax);
    std::swap(x, x_new);
    std::swap(ax, ax_new);
    const double f_prev = fx;
    fx = f_new;

    if (opt.accelerate) {
      const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
      const double beta = (theta - 1.0) / theta_next;
      theta = theta_next;
      if (beta > 0.0) {
        for (int i : support) {
          const auto a = x.group(i);
          const auto b = x_prev.group(i);
          auto yi = y.group(i);
          for (int c = 0; c < kGroupSize; ++c) {
            yi[static_cast<std::size_t>(c)] =
                a[static_cast<std::size_t>(c)] + beta * (a[static_cast<std::size_t>(c)] - b[static_cast<std::size_t>(c)]);
          }
        }
        for (std::size_t p = 0; p < ay.size(); ++p) ay[p] = ax[p] + beta * (ax[p] - ax_prev[p]);
        fy = ev.value(y, ay);
        extrapolated = true;
        if (!std::isfinite(fy)) {
          y = x;
          ay = ax;
          fy = fx;
          theta = 1.0;
          extrapolated = false;
        }
      } else {
        y = x;
        ay = ax;
        fy = fx;
        extrapolated = false;
      }
    } else {
      y = x;
      ay = ax;
      fy = fx;
    }

    record(fx);
    const double rel = std::abs(f_prev - fx) / std::max(1.0, std::abs(fx));
    small_changes = rel < opt.tolerance ? small_changes + 1 : 0;
    since_improvement = fx < f_prev ? 0 : since_improvement + 1;
    if (small_changes >= opt.patience) {
      res.converged = true;
      break;
    }
    if (opt.stall_window > 0 && since_improvement >= opt.stall_window) {
      res.stalled = true;
      break;
    }
  }
  res.final_objective = fx;
  res.x = std::move(x);
  return res;
}

double estimate_curvature(const PoissonProblem& problem, int iterations) {
  Evaluator ev(problem);
  const int n = problem.op->grid_size();
  const auto& bg = *problem.background;
  std::vector<double> weight(ev.pixels());
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] = 1.0 / std::max({problem.counts[i], bg[i], 1.0});
  }
  JointSignal v(n);
  for (int i : ev.support()) {
    for (double& c : v.group(i)) c = 1.0;
  }
  double lambda_max = 0.0;
  std::vector<double> av;
  JointSignal u(n);
  for (int it = 0; it < iterations; ++it) {
    const double vn = std::sqrt(dot(v, v));
    if (vn == 0.0) return 0.0;
    for (double& c : v.values()) c /= vn;
    ev.model(v, av);
    for (std::size_t p = 0; p < av.size(); ++p) av[p] *= weight[p];
    u.set_zero();
    problem.op->adjoint_groups(av, ev.support(), u);
    lambda_max = dot(v, u);
    std::swap(u, v);
  }
  return lambda_max;
}

double default_lambda(const DesignOperator& op, const Background& background, double lambda0) {
  const double b = std::max(background.median(), 1.0);
  return lambda0 * op.group_column_norm() / std::sqrt(b);
}

int count_active_groups(const JointSignal& f, double threshold) {
  int n = 0;
  for (int i = 0; i < f.groups(); ++i) {
    double s = 0.0;
    for (double v : f.group(i)) s += v * v;
    if (std::sqrt(s) > threshold) ++n;
  }
  return n;
}

DeconvolutionResult deconvolve(std::span<const double> counts, const DesignOperator& op,
                               const SolverConfig& cfg, const IterateObserver& observer) {
  cfg.validate();
  if (counts.size() != op.pixel_count()) throw ShapeError("frame does not match operator");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!(counts[i] >= 0.0) || !std::isfinite(counts[i])) {
      throw DomainError("frame pixel " + std::to_string(i) + " is negative or not finite");
    }
  }
  cfg.background.check_size(op.pixel_count());

  PoissonProblem problem;
  problem.op = &op;
  problem.counts = counts;
  problem.background = &cfg.background;
  const double curvature = estimate_curvature(problem);
  problem.tau = cfg.tau > 0.0 ? cfg.tau : 1.0 / std::max(curvature, 1e-12);
  problem.lambda = cfg.lambda > 0.0 ? cfg.lambda : default_lambda(op, cfg.background, cfg.lambda0);

  ProjectedGradientOptions opt;
  opt.max_iterations = cfg.max_iterations;
  opt.tolerance = cfg.tolerance;
  opt.patience = cfg.patience;
  opt.step_rule = cfg.step_rule;
  opt.backtrack_factor = cfg.backtrack_factor;
  opt.step_growth = cfg.step_growth;
  opt.initial_step = cfg.initial_step > 0.0 ? cfg.initial_step
                                            : 1.0 / (curvature + 1.0 / problem.tau);
  auto pg = minimize_projected(problem, JointSignal(op.grid_size()), opt, observer);

  DeconvolutionResult out;
  // The prox point of the final iterate carries the exact group zeros; the
  // uniform per-group scaling keeps it inside the cones.
  out.signal = prox_group_norm(pg.x, problem.tau * problem.lambda);
  out.iterate = std::move(pg.x);
  out.history = std::move(pg.history);
  out.iterations = pg.iterations;
  out.restarts = pg.restarts;
  out.converged = pg.converged;
  out.lambda = problem.lambda;
  out.tau = problem.tau;
  out.initial_objective = pg.initial_objective;
  out.final_objective = pg.final_objective;
  return out;
}

void write_diagnostics(std::ostream& out, std::span<const IterationRecord> history) {
  out << "iteration,objective,step,nonzero_groups\n";
  const auto old_precision = out.precision(17);
  for (const auto& r : history) {
    out << r.iteration << ',' << r.objective << ',' << r.step << ',' << r.nonzero_groups << '\n';
  }
  out.precision(old_precision);
}

}  // namespace sbd
