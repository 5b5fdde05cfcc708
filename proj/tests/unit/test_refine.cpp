#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "sbd/errors.hpp"
#include "sbd/forward_model.hpp"
#include "sbd/moments.hpp"
#include "sbd/orientation.hpp"
#include "sbd/pipeline.hpp"
#include "sbd/refine.hpp"

using namespace sbd;

namespace {

std::array<double, 6> scaled(const SecondMoments& m, double s) {
  std::array<double, 6> e{};
  for (int j = 0; j < 6; ++j) e[j] = s * m.m[j];
  return e;
}

}  // namespace

TEST_CASE("moments invert to the generating orientation") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> th(0.05, M_PI / 2 - 0.05), ph(-M_PI + 0.05, M_PI - 0.05), ga(0.05, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double theta = th(rng), phi = ph(rng), gamma = ga(rng);
    const auto o = moments_to_orientation(scaled(moments_from_cone(theta, phi, gamma), 1234.0));
    CHECK(o.s == doctest::Approx(1234.0).epsilon(1e-12));
    CHECK(std::abs(o.theta - theta) < 1e-9);
    CHECK(std::abs(o.phi - phi) < 1e-9);
    CHECK(std::abs(o.gamma - gamma) < 1e-9);
    CHECK(std::abs(o.cone_half_angle - cone_angle_from_gamma(gamma)) < 1e-9);
    CHECK_FALSE(o.indeterminate);
  }
}

TEST_CASE("orientation canonicalization for the hemisphere and the plane") {
  // Lower-hemisphere dipole maps to its antipode.
  const auto lower = moments_to_orientation(scaled(moments_from_cone(2.5, 0.3, 1.0), 1.0));
  CHECK(lower.theta == doctest::Approx(M_PI - 2.5));
  CHECK(lower.phi == doctest::Approx(0.3 - M_PI));
  const auto planar = moments_to_orientation(scaled(moments_from_cone(M_PI / 2, 2.8, 1.0), 1.0));
  CHECK(planar.theta == doctest::Approx(M_PI / 2));
  CHECK(planar.phi == doctest::Approx(2.8 - M_PI));
}

TEST_CASE("isotropic moments are flagged indeterminate") {
  const auto o = moments_to_orientation({1.0, 1.0, 1.0, 0.0, 0.0, 0.0});
  CHECK(o.indeterminate);
  CHECK(o.gamma == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(moments_to_orientation({0.0, 0.0, 0.0, 1.0, 0.0, 0.0}), EstimationError);
}

TEST_CASE("non-PSD estimates are projected to a unit-trace PSD matrix") {
  const auto o = moments_to_orientation({1.0, 0.1, -0.2, 0.5, 0.0, 0.0});
  CHECK(o.M.trace() == doctest::Approx(1.0));
  CHECK(o.M.min_eigenvalue() >= -1e-15);
  CHECK(o.gamma <= 1.0);
}

TEST_CASE("refinement recovers a noiseless on-grid emitter") {
  const auto op = test::make_op(15, 15);
  const auto& g = op.geometry();
  const int i = (g.grid_height / 2) * g.grid_width + g.grid_width / 2;
  const Emitter e{4000.0, g.grid_point(i), ConeOrientation{1.0, -0.7, 0.8}};
  const auto frame = render_scene(std::vector<Emitter>{e}, op, Background(5.0));
  AnalysisOptions opts;
  opts.background_mode = BackgroundMode::Fixed;
  const auto a = analyze_frame(frame, op, opts);
  REQUIRE(a.refined.emitters.size() == 1);
  const auto& est = a.refined.emitters[0];
  CHECK(est.s == doctest::Approx(4000.0).epsilon(1e-4));
  CHECK(std::hypot(est.r.x_nm - e.r.x_nm, est.r.y_nm - e.r.y_nm) < 0.05);
  CHECK(est.theta == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(est.phi == doctest::Approx(-0.7).epsilon(1e-4));
  CHECK(est.gamma == doctest::Approx(0.8).epsilon(1e-4));
  CHECK(a.refined.final_nll <= a.refined.initial_nll);
  CHECK(a.refined.converged);
}

TEST_CASE("refinement never leaves the cone constraints") {
  const auto op = test::make_op(15, 15);
  const auto& g = op.geometry();
  const Emitter e{2500.0, {0.3 * g.pixel_size_nm, -0.2 * g.pixel_size_nm}, ConeOrientation{M_PI / 2, 0.4, 0.9}};
  const auto frame = sample_poisson(render_scene(std::vector<Emitter>{e}, op, Background(5.0)), 9);
  AnalysisOptions opts;
  opts.background_mode = BackgroundMode::Fixed;
  const auto a = analyze_frame(frame, op, opts);
  REQUIRE(a.refined.emitters.size() == 1);
  CHECK(cone_residual(a.refined.signal, g.rho_subpx()) == 0.0);
  const auto& est = a.refined.emitters[0];
  const Position grid = g.grid_point(est.grid_index);
  CHECK(std::abs(est.r.x_nm - grid.x_nm) <= g.rho_nm() + 1e-9);
  CHECK(std::abs(est.r.y_nm - grid.y_nm) <= g.rho_nm() + 1e-9);
}

TEST_CASE("refinement with no detections reports the empty model") {
  const auto op = test::make_op(7, 7);
  const std::vector<double> g(op.pixel_count(), 5.0);
  const auto r = refine_mle(g, op, Background(5.0), {}, RefineOptions{});
  CHECK(r.emitters.empty());
  CHECK(r.converged);
  CHECK(r.final_nll == doctest::Approx(r.initial_nll));
}

TEST_CASE("detections sharing a cell merge into one group") {
  const auto op = test::make_op(9, 9);
  const auto& g = op.geometry();
  Detection a, b;
  a.grid_index = b.grid_index = 40;
  a.r = b.r = g.grid_point(40);
  a.s = b.s = 100.0;
  a.eta = b.eta = {40.0, 30.0, 30.0, 0.0, 0.0, 0.0};
  std::vector<int> support;
  const auto f = refine_initial_point(std::vector<Detection>{a, b}, g, support);
  CHECK(support == std::vector<int>{40});
  CHECK(f.eta(40, 0) == doctest::Approx(80.0));
}
