#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "sbd/errors.hpp"
#include "sbd/objective.hpp"

using namespace sbd;

namespace {

double scalar_nll(const std::vector<double>& mean, std::span<const double> g) {
  double total = 0.0;
  for (std::size_t p = 0; p < mean.size(); ++p) total += mean[p] - g[p] * std::log(mean[p]);
  return total;
}

// Derivative-free compass search for argmin 0.5 |x - v|^2 + t |x|.
std::vector<double> compass_prox(const std::vector<double>& v, double t) {
  auto h = [&](const std::vector<double>& x) {
    double d = 0.0, n = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      d += (x[k] - v[k]) * (x[k] - v[k]);
      n += x[k] * x[k];
    }
    return 0.5 * d + t * std::sqrt(n);
  };
  std::vector<double> x(v.begin(), v.end());
  double best = h(x);
  // Coordinate directions plus fixed random unit directions.
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<std::vector<double>> dirs(40, std::vector<double>(v.size()));
  for (auto& d : dirs) {
    double n2 = 0.0;
    for (double& c : d) {
      c = nd(rng);
      n2 += c * c;
    }
    for (double& c : d) c /= std::sqrt(n2);
  }
  double step = 1.0;
  for (double a : v) step = std::max(step, std::abs(a));
  while (step > 1e-9) {
    bool moved = false;
    for (std::size_t k = 0; k < x.size(); ++k) {
      for (double sgn : {1.0, -1.0}) {
        auto y = x;
        y[k] += sgn * step;
        const double hy = h(y);
        if (hy < best) {
          best = hy;
          x = y;
          moved = true;
        }
      }
    }
    for (const auto& d : dirs) {
      for (double sgn : {1.0, -1.0}) {
        auto y = x;
        for (std::size_t k = 0; k < x.size(); ++k) y[k] += sgn * step * d[k];
        const double hy = h(y);
        if (hy < best) {
          best = hy;
          x = std::move(y);
          moved = true;
        }
      }
    }
    if (!moved) step *= 0.5;
  }
  const std::vector<double> zero(v.size(), 0.0);
  return h(zero) <= best ? zero : x;
}

// Nearest point of {|z| <= rho e} by nested grid search over the boundary.
std::array<double, 3> grid_project(double eta, double zx, double zy, double rho) {
  if (std::hypot(zx, zy) <= rho * eta) return {eta, zx, zy};
  auto dist = [&](double e, double psi) {
    const double r = rho * e;
    return (e - eta) * (e - eta) + (r * std::cos(psi) - zx) * (r * std::cos(psi) - zx) +
           (r * std::sin(psi) - zy) * (r * std::sin(psi) - zy);
  };
  const double scale = std::max({std::abs(eta), std::hypot(zx, zy), 1.0});
  double e_lo = 0.0, e_hi = 2.0 * scale, p_lo = -M_PI, p_hi = M_PI;
  double best_e = 0.0, best_p = 0.0;
  for (int level = 0; level < 12; ++level) {
    double best = std::numeric_limits<double>::infinity();
    constexpr int n = 60;
    for (int a = 0; a <= n; ++a) {
      for (int b = 0; b <= n; ++b) {
        const double e = e_lo + (e_hi - e_lo) * a / n;
        const double p = p_lo + (p_hi - p_lo) * b / n;
        const double d = dist(e, p);
        if (d < best) {
          best = d;
          best_e = e;
          best_p = p;
        }
      }
    }
    const double de = 2.0 * (e_hi - e_lo) / n, dp = 2.0 * (p_hi - p_lo) / n;
    e_lo = std::max(0.0, best_e - de);
    e_hi = best_e + de;
    p_lo = best_p - dp;
    p_hi = best_p + dp;
  }
  return {best_e, rho * best_e * std::cos(best_p), rho * best_e * std::sin(best_p)};
}

}  // namespace

TEST_CASE("operator matches a dense column-by-column product") {
  const auto op = test::make_op(9, 7);
  std::mt19937_64 rng(1);
  const auto f = test::random_signal(op.grid_size(), rng, 100.0, 0.3, op.geometry().rho_subpx());
  std::vector<double> fast(op.pixel_count());
  op.apply(f, fast);
  const auto dense = test::dense_apply(op, f);
  for (std::size_t p = 0; p < fast.size(); ++p) CHECK(fast[p] == doctest::Approx(dense[p]).epsilon(1e-12));
}

TEST_CASE("adjoint satisfies the dot-product identity") {
  const auto op = test::make_op(11, 13);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    JointSignal f(op.grid_size());
    for (double& v : f.values()) v = n(rng);
    std::vector<double> y(op.pixel_count());
    for (double& v : y) v = n(rng);
    std::vector<double> af(op.pixel_count());
    op.apply(f, af);
    JointSignal aty(op.grid_size());
    op.adjoint(y, aty);
    const double lhs = std::inner_product(af.begin(), af.end(), y.begin(), 0.0);
    CHECK(lhs == doctest::Approx(dot(f, aty)).epsilon(1e-11));
  }
}

TEST_CASE("negative log-likelihood equals a scalar loop over pixels") {
  const auto op = test::make_op(10, 8);
  std::mt19937_64 rng(3);
  const auto f = test::random_signal(op.grid_size(), rng, 200.0, 0.2, op.geometry().rho_subpx());
  const Background b(4.0);
  auto mean = test::dense_apply(op, f);
  for (double& m : mean) m += 4.0;
  std::poisson_distribution<int> pois(6.0);
  std::vector<double> g(op.pixel_count());
  for (double& v : g) v = pois(rng);
  CHECK(neg_log_likelihood(f, op, g, b) == doctest::Approx(scalar_nll(mean, g)).epsilon(1e-12));
}

TEST_CASE("likelihood rejects a negative mean with a positive count") {
  const std::vector<double> mean{1.0, -0.5};
  const std::vector<double> g{1.0, 2.0};
  CHECK_THROWS_AS(poisson_nll(mean, g), EvaluationError);
  const std::vector<double> g0{1.0, 0.0};
  CHECK_NOTHROW(poisson_nll(std::vector<double>{1.0, 1e-12}, g0));
}

TEST_CASE("likelihood and envelope gradients match central differences") {
  const auto op = test::make_op(12, 10);
  std::mt19937_64 rng(4);
  const double rho = op.geometry().rho_subpx();
  const auto f = test::random_signal(op.grid_size(), rng, 300.0, 0.4, rho);
  const auto truth = test::random_signal(op.grid_size(), rng, 300.0, 0.4, rho);
  const Background b(5.0);
  std::vector<double> g(op.pixel_count());
  op.apply(truth, g);
  for (double& v : g) v = std::round(v + 5.0);
  const auto grad = nll_gradient(f, op, g, b);
  const double tau = 0.7, lambda = 40.0;
  const auto mgrad = moreau_gradient(f, tau, lambda);
  std::uniform_int_distribution<std::size_t> pick(0, f.values().size() - 1);
  for (int k = 0; k < 30; ++k) {
    const std::size_t c = pick(rng);
    JointSignal hi = f, lo = f;
    const double h = 1e-4 * std::max(1.0, std::abs(f.values()[c]));
    hi.values()[c] += h;
    lo.values()[c] -= h;
    const double fd = (neg_log_likelihood(hi, op, g, b) - neg_log_likelihood(lo, op, g, b)) / (2 * h);
    CHECK(std::abs(fd - grad.values()[c]) <= 1e-5 * std::max(1.0, std::abs(grad.values()[c])));
    const double fdm = (moreau_envelope(hi, tau, lambda) - moreau_envelope(lo, tau, lambda)) / (2 * h);
    CHECK(std::abs(fdm - mgrad.values()[c]) <= 1e-5 * std::max(1.0, std::abs(mgrad.values()[c])));
  }
}

TEST_CASE("group soft-thresholding matches a compass-search argmin") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int groups = 1; groups <= 3; ++groups) {
    JointSignal f(groups);
    for (double& v : f.values()) v = 2.0 * n(rng);
    const double t = 3.0;
    const auto p = prox_group_norm(f, t);
    for (int i = 0; i < groups; ++i) {
      const auto g = f.group(i);
      const auto oracle = compass_prox(std::vector<double>(g.begin(), g.end()), t);
      for (int c = 0; c < kGroupSize; ++c) CHECK(std::abs(p.group(i)[c] - oracle[c]) < 1e-3);
    }
  }
  JointSignal small(1);
  small.values()[0] = 0.5;
  CHECK(prox_group_norm(small, 1.0).group_is_zero(0));
  CHECK(prox_group_norm(JointSignal(2), 1.0).group_is_zero(1));
}

TEST_CASE("cone projection matches a grid search for the nearest point") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  const double rho = 2.0;
  for (int trial = 0; trial < 40; ++trial) {
    double e = 3.0 * n(rng), zx = 5.0 * n(rng), zy = 5.0 * n(rng);
    const auto oracle = grid_project(e, zx, zy, rho);
    project_cone(e, zx, zy, rho);
    CHECK(std::abs(e - oracle[0]) < 1e-3);
    CHECK(std::abs(zx - oracle[1]) < 1e-3);
    CHECK(std::abs(zy - oracle[2]) < 1e-3);
  }
}

TEST_CASE("projection is idempotent bitwise and leaves unshifted bases alone") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  JointSignal f(50);
  for (double& v : f.values()) v = 10.0 * n(rng);
  const auto p = project_soc(f, 1.5);
  CHECK(project_soc(p, 1.5) == p);
  CHECK(cone_residual(p, 1.5) == 0.0);
  for (int i = 0; i < f.groups(); ++i)
    for (int j = 3; j < kNumBases; ++j) CHECK(p.eta(i, j) == f.eta(i, j));
  CHECK_THROWS_AS(project_soc(f, 0.0), ParameterError);
}

TEST_CASE("prox and projection are nonexpansive") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int pair = 0; pair < 100; ++pair) {
    JointSignal a(3), b(3);
    for (double& v : a.values()) v = 4.0 * n(rng);
    for (double& v : b.values()) v = 4.0 * n(rng);
    const double d = squared_distance(a, b);
    CHECK(squared_distance(prox_group_norm(a, 2.0), prox_group_norm(b, 2.0)) <= d * (1 + 1e-12));
    CHECK(squared_distance(project_soc(a, 1.0), project_soc(b, 1.0)) <= d * (1 + 1e-12));
  }
}

TEST_CASE("Moreau envelope lies between zero and the regularizer") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  JointSignal f(20);
  for (double& v : f.values()) v = n(rng);
  const double lambda = 0.8;
  for (double tau : {0.01, 0.3, 2.0}) {
    const double e = moreau_envelope(f, tau, lambda);
    CHECK(e >= 0.0);
    CHECK(e <= lambda * group_norm(f) + 1e-12);
  }
  CHECK(moreau_envelope(f, 1e-8, lambda) == doctest::Approx(lambda * group_norm(f)).epsilon(1e-6));
}
