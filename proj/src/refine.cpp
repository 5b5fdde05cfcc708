#include "sbd/refine.hpp"

#include <algorithm>
#include <map>

#include "sbd/errors.hpp"
#include "sbd/objective.hpp"
#include "sbd/orientation.hpp"
#include "sbd/solver.hpp"

namespace sbd {

JointSignal refine_initial_point(std::span<const Detection> detections, const GridGeometry& geom,
                                 std::vector<int>& support) {
  JointSignal x(geom.grid_size());
  std::map<int, char> seen;
  for (const auto& d : detections) {
    const int cell = geom.cell_of(d.r);
    seen[cell] = 1;
    const Position center = geom.grid_point(cell);
    const double ox = (d.r.x_nm - center.x_nm) / geom.subpixel_nm();
    const double oy = (d.r.y_nm - center.y_nm) / geom.subpixel_nm();
    for (int j = 0; j < kNumBases; ++j) {
      const double eta = d.eta[static_cast<std::size_t>(j)];
      x.eta(cell, j) += eta;
      if (j < kNumShiftedBases) {
        x.zeta_x(cell, j) += eta * ox;
        x.zeta_y(cell, j) += eta * oy;
      }
    }
  }
  support.clear();
  for (const auto& [cell, unused] : seen) support.push_back(cell);
  project_soc_inplace(x, geom.rho_subpx());
  return x;
}

RefineResult refine_mle(std::span<const double> counts, const DesignOperator& op,
                        const Background& background, std::span<const Detection> detections,
                        const RefineOptions& options) {
  RefineResult out;
  const auto& geom = op.geometry();
  out.signal = JointSignal(op.grid_size());
  if (detections.empty()) {
    out.initial_nll = out.final_nll = neg_log_likelihood(out.signal, op, counts, background);
    out.converged = true;
    return out;
  }
  JointSignal x0 = refine_initial_point(detections, geom, out.support);

  PoissonProblem problem;
  problem.op = &op;
  problem.counts = counts;
  problem.background = &background;
  problem.lambda = 0.0;
  problem.tau = 1.0;
  problem.support = out.support;

  ProjectedGradientOptions pg;
  pg.max_iterations = options.max_iterations;
  pg.tolerance = options.tolerance;
  pg.patience = options.patience;
  pg.stall_window = options.stall_window;
  pg.initial_step = 1.0 / std::max(estimate_curvature(problem), 1e-12);
  auto res = minimize_projected(problem, x0, pg);

  out.signal = std::move(res.x);
  out.initial_nll = res.initial_objective;
  out.final_nll = res.final_objective;
  out.iterations = res.iterations;
  out.converged = res.converged;
  out.stalled = res.stalled;

  std::uint32_t common = kFlagNone;
  if (res.stalled) common |= kFlagStalled;
  if (!res.converged && !res.stalled) common |= kFlagNotConverged;
  for (int cell : out.support) {
    EmitterEstimate e;
    double zx = 0.0;
    double zy = 0.0;
    double w = 0.0;
    for (int j = 0; j < kNumBases; ++j) e.eta[static_cast<std::size_t>(j)] = out.signal.eta(cell, j);
    for (int j = 0; j < kNumShiftedBases; ++j) {
      w += out.signal.eta(cell, j);
      zx += out.signal.zeta_x(cell, j);
      zy += out.signal.zeta_y(cell, j);
    }
    if (!(w > 0.0)) continue;
    const auto o = moments_to_orientation(e.eta, options.indeterminate_gap);
    const int qx = cell % geom.grid_width;
    const int qy = cell / geom.grid_width;
    e.s = o.s;
    e.r = {geom.to_nm_x(geom.grid_x_subpx(qx) + zx / w), geom.to_nm_y(geom.grid_y_subpx(qy) + zy / w)};
    e.M = o.M;
    e.theta = o.theta;
    e.phi = o.phi;
    e.gamma = o.gamma;
    e.cone_half_angle = o.cone_half_angle;
    e.nll = out.final_nll;
    e.support_size = static_cast<int>(out.support.size());
    e.grid_index = cell;
    e.flags = common | (o.indeterminate ? kFlagOrientationIndeterminate : kFlagNone);
    out.emitters.push_back(e);
  }
  return out;
}

}  // namespace sbd
