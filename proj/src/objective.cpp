#include "sbd/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sbd/errors.hpp"

namespace sbd {

namespace {

std::vector<double> model_mean(const JointSignal& f, const DesignOperator& op,
                               const Background& background) {
  background.check_size(op.pixel_count());
  std::vector<double> mean(op.pixel_count());
  op.apply(f, mean);
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += background[i];
  return mean;
}

double group_l2(std::span<const double> g) {
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

}  // namespace

double poisson_nll(std::span<const double> mean, std::span<const double> counts) {
  if (mean.size() != counts.size()) throw ShapeError("mean and counts differ in size");
  double acc = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double mu = mean[i];
    const double g = counts[i];
    if (g > 0.0) {
      if (mu < 0.0) {
        throw EvaluationError("negative mean at pixel " + std::to_string(i) + " with count " +
                              std::to_string(g));
      }
      acc += mu - g * std::log(std::max(mu, kMeanFloor));
    } else {
      acc += mu;
    }
  }
  return acc;
}

double neg_log_likelihood(const JointSignal& f, const DesignOperator& op,
                          std::span<const double> counts, const Background& background) {
  if (counts.size() != op.pixel_count()) throw ShapeError("frame does not match operator");
  return poisson_nll(model_mean(f, op, background), counts);
}

JointSignal nll_gradient(const JointSignal& f, const DesignOperator& op,
                         std::span<const double> counts, const Background& background) {
  if (counts.size() != op.pixel_count()) throw ShapeError("frame does not match operator");
  auto w = model_mean(f, op, background);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double g = counts[i];
    if (g > 0.0 && w[i] < 0.0) {
      throw EvaluationError("negative mean at pixel " + std::to_string(i));
    }
    w[i] = (g > 0.0 && w[i] >= kMeanFloor) ? 1.0 - g / w[i] : 1.0;
  }
  JointSignal grad(op.grid_size());
  op.adjoint(w, grad);
  return grad;
}

double group_norm(const JointSignal& f) {
  double acc = 0.0;
  for (int i = 0; i < f.groups(); ++i) acc += group_l2(f.group(i));
  return acc;
}

JointSignal prox_group_norm(const JointSignal& f, double threshold) {
  if (threshold < 0.0) throw ParameterError("prox threshold must be >= 0");
  JointSignal out = f;
  for (int i = 0; i < out.groups(); ++i) {
    auto g = out.group(i);
    const double n = group_l2(g);
    const double scale = n > threshold ? 1.0 - threshold / n : 0.0;
    for (double& v : g) v *= scale;
  }
  return out;
}

double moreau_envelope(const JointSignal& f, double tau, double lambda) {
  if (!(tau > 0.0)) throw ParameterError("tau must be positive");
  const JointSignal p = prox_group_norm(f, tau * lambda);
  return lambda * group_norm(p) + squared_distance(f, p) / (2.0 * tau);
}

JointSignal moreau_gradient(const JointSignal& f, double tau, double lambda) {
  if (!(tau > 0.0)) throw ParameterError("tau must be positive");
  const JointSignal p = prox_group_norm(f, tau * lambda);
  JointSignal out = f;
  for (std::size_t k = 0; k < out.values().size(); ++k) {
    out.values()[k] = (f.values()[k] - p.values()[k]) / tau;
  }
  return out;
}

void project_cone(double& eta, double& zx, double& zy, double rho) noexcept {
  const double zn = std::hypot(zx, zy);
  // The relative slack keeps the projection idempotent under rounding.
  if (zn <= rho * eta * (1.0 + 1e-13) || (zn == 0.0 && eta >= 0.0)) return;
  if (rho * zn <= -eta) {
    eta = 0.0;
    zx = 0.0;
    zy = 0.0;
    return;
  }
  const double e = (eta + rho * zn) / (1.0 + rho * rho);
  double scale = rho * e / zn;
  // Shrink by a few ulps where rounding lands just outside the cone.
  while (std::hypot(zx * scale, zy * scale) > rho * e) scale *= 1.0 - 0x1p-52;
  eta = e;
  zx *= scale;
  zy *= scale;
}

void project_soc_inplace(JointSignal& f, double rho) {
  for (int i = 0; i < f.groups(); ++i) {
    for (int j = 0; j < kNumShiftedBases; ++j) {
      project_cone(f.eta(i, j), f.zeta_x(i, j), f.zeta_y(i, j), rho);
    }
  }
}

JointSignal project_soc(const JointSignal& f, double rho) {
  if (!(rho > 0.0)) throw ParameterError("rho must be positive");
  JointSignal out = f;
  project_soc_inplace(out, rho);
  return out;
}

double cone_residual(const JointSignal& f, double rho) {
  double worst = 0.0;
  for (int i = 0; i < f.groups(); ++i) {
    for (int j = 0; j < kNumShiftedBases; ++j) {
      const double eta = f.eta(i, j);
      const double zn = std::hypot(f.zeta_x(i, j), f.zeta_y(i, j));
      worst = std::max(worst, std::max(0.0, zn - rho * eta) / std::max(1.0, std::abs(eta)));
      if (eta < 0.0) worst = std::max(worst, -eta);
    }
  }
  return worst;
}

}  // namespace sbd
