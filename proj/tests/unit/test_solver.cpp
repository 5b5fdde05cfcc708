#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "helpers.hpp"
#include "sbd/errors.hpp"
#include "sbd/forward_model.hpp"
#include "sbd/moments.hpp"
#include "sbd/solver.hpp"

using namespace sbd;

namespace {

std::vector<double> noisy_frame(const DesignOperator& op, std::uint64_t seed) {
  const auto& g = op.geometry();
  std::vector<Emitter> es{
      Emitter{3000.0, {0.2 * g.pixel_size_nm, -0.1 * g.pixel_size_nm}, moments_from_cone(M_PI / 2, 0.3, 0.9)},
      Emitter{2000.0, {-3.1 * g.pixel_size_nm, 2.4 * g.pixel_size_nm}, ConeOrientation{0.4, 1.0, 0.6}}};
  return sample_poisson(render_scene(es, op, Background(5.0)), seed).pixels;
}

SolverConfig config(int iterations) {
  SolverConfig c;
  c.background = 5.0;
  c.max_iterations = iterations;
  return c;
}

}  // namespace

TEST_CASE("every solver iterate is feasible and objectives never increase") {
  const auto op = test::make_op(13, 13);
  const auto g = noisy_frame(op, 3);
  const double rho = op.geometry().rho_subpx();
  int calls = 0;
  double worst = 0.0;
  const auto r = deconvolve(g, op, config(300), [&](int, const JointSignal& f) {
    ++calls;
    worst = std::max(worst, cone_residual(f, rho));
  });
  CHECK(calls == r.iterations);
  CHECK(worst == 0.0);
  CHECK(cone_residual(r.signal, rho) == 0.0);
  REQUIRE(!r.history.empty());
  for (std::size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k].objective <= r.history[k - 1].objective);
  CHECK(r.final_objective < r.initial_objective);
}

TEST_CASE("returned signal is group sparse and concentrated near the emitters") {
  const auto op = test::make_op(13, 13);
  const auto g = noisy_frame(op, 4);
  const auto r = deconvolve(g, op, config(2000));
  CHECK(r.converged);
  const int active = count_active_groups(r.signal, 0.0);
  CHECK(active >= 2);
  CHECK(active < op.grid_size() / 4);
  double total = 0.0;
  for (int i = 0; i < op.grid_size(); ++i) total += r.signal.eta(i, 0) + r.signal.eta(i, 1) + r.signal.eta(i, 2);
  // Group shrinkage biases the deconvolved photons low; refinement removes it.
  CHECK(total > 0.5 * 5000.0);
  CHECK(total < 1.05 * 5000.0);
}

TEST_CASE("solver output is bitwise reproducible") {
  const auto op = test::make_op(11, 11);
  const auto g = noisy_frame(op, 5);
  const auto a = deconvolve(g, op, config(200));
  const auto b = deconvolve(g, op, config(200));
  CHECK(a.signal == b.signal);
  CHECK(a.iterations == b.iterations);
  std::ostringstream da, db;
  write_diagnostics(da, a.history);
  write_diagnostics(db, b.history);
  CHECK(da.str() == db.str());
  CHECK(da.str().rfind("iteration,objective,step,nonzero_groups\n", 0) == 0);
}

TEST_CASE("fixed step rule also keeps iterates feasible") {
  const auto op = test::make_op(11, 11);
  const auto g = noisy_frame(op, 6);
  auto c = config(100);
  c.step_rule = StepRule::Fixed;
  c.initial_step = 1e-4;
  const double rho = op.geometry().rho_subpx();
  double worst = 0.0;
  const auto r = deconvolve(g, op, c, [&](int, const JointSignal& f) { worst = std::max(worst, cone_residual(f, rho)); });
  CHECK(worst == 0.0);
  CHECK(r.final_objective <= r.initial_objective);
}

TEST_CASE("solver configuration errors name the field") {
  auto bad = [](auto mutate, const char* field) {
    SolverConfig c;
    mutate(c);
    try {
      c.validate();
      FAIL("expected ConfigError for " << field);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(field) != std::string::npos);
    }
  };
  bad([](SolverConfig& c) { c.max_iterations = 0; }, "max_iterations");
  bad([](SolverConfig& c) { c.tolerance = 0.0; }, "tolerance");
  bad([](SolverConfig& c) { c.lambda0 = -1.0; }, "lambda0");
  bad([](SolverConfig& c) { c.backtrack_factor = 1.5; }, "backtrack_factor");
  bad([](SolverConfig& c) { c.step_growth = 0.5; }, "step_growth");
  bad([](SolverConfig& c) {
    c.step_rule = StepRule::Fixed;
    c.initial_step = 0.0;
  }, "initial_step");
}

TEST_CASE("invalid frames are rejected before iterating") {
  const auto op = test::make_op(7, 7);
  std::vector<double> g(op.pixel_count(), 3.0);
  g[10] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(deconvolve(g, op, config(10)), DomainError);
  g[10] = -1.0;
  CHECK_THROWS_AS(deconvolve(g, op, config(10)), DomainError);
  CHECK_THROWS_AS(deconvolve(std::vector<double>(5, 1.0), op, config(10)), ShapeError);
}

TEST_CASE("background-only frame leaves the signal at zero") {
  const auto op = test::make_op(7, 7);
  // g = b makes F = 0 stationary, hence optimal for the convex objective.
  const std::vector<double> g(op.pixel_count(), 5.0);
  const auto r = deconvolve(g, op, config(50));
  CHECK(count_active_groups(r.signal, 0.0) == 0);
}

TEST_CASE("default lambda scales with the group column norm and background") {
  const auto op = test::make_op(9, 9);
  const double l1 = default_lambda(op, Background(4.0), 2.0);
  const double l2 = default_lambda(op, Background(16.0), 2.0);
  CHECK(l1 == doctest::Approx(2.0 * op.group_column_norm() / 2.0));
  CHECK(l1 / l2 == doctest::Approx(2.0));
}
