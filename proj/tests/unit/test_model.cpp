#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "helpers.hpp"
#include "sbd/errors.hpp"
#include "sbd/forward_model.hpp"
#include "sbd/moments.hpp"

using namespace sbd;

namespace {

double centroid_x(const Frame& f, Channel c) {
  double w = 0.0, x = 0.0;
  for (int r = 0; r < f.height; ++r)
    for (int col = 0; col < f.width; ++col) {
      w += f.at(c, r, col);
      x += f.at(c, r, col) * col;
    }
  return x / w;
}

std::vector<double> minus(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("cone moments are PSD with unit trace across a parameter sweep") {
  for (double theta = 0.0; theta <= M_PI; theta += M_PI / 12)
    for (double phi = -M_PI; phi <= M_PI; phi += M_PI / 10)
      for (double gamma = 0.0; gamma <= 1.0; gamma += 0.125) {
        const auto m = moments_from_cone(theta, phi, gamma);
        CHECK(m.trace() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(m.min_eigenvalue() >= -1e-14);
        CHECK(m.min_eigenvalue() == doctest::Approx((1.0 - gamma) / 3.0).epsilon(1e-9));
      }
  CHECK_THROWS_AS(moments_from_cone(0.0, 0.0, -0.1), ParameterError);
  CHECK_THROWS_AS(moments_from_cone(0.0, 0.0, 1.1), ParameterError);
}

TEST_CASE("cone moments agree with Monte-Carlo averages over the cone") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double theta = 0.9, phi = 0.4;
  const Eigen::Vector3d axis = dipole_direction(theta, phi);
  Eigen::Vector3d e1 = axis.unitOrthogonal();
  Eigen::Vector3d e2 = axis.cross(e1);
  for (double alpha : {0.2, 0.7, 1.2}) {
    Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
    constexpr int n = 200000;
    for (int k = 0; k < n; ++k) {
      const double c = 1.0 - u(rng) * (1.0 - std::cos(alpha));
      const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
      const double psi = 2.0 * M_PI * u(rng);
      const Eigen::Vector3d mu = c * axis + s * (std::cos(psi) * e1 + std::sin(psi) * e2);
      acc += mu * mu.transpose();
    }
    acc /= n;
    const auto model = moments_from_cone(theta, phi, gamma_from_cone_angle(alpha)).matrix();
    CHECK((acc - model).cwiseAbs().maxCoeff() < 5e-3);
  }
}

TEST_CASE("cone angle and gamma invert each other") {
  for (double a = 0.0; a <= M_PI / 2; a += 0.05)
    CHECK(cone_angle_from_gamma(gamma_from_cone_angle(a)) == doctest::Approx(a).epsilon(1e-9));
  CHECK(gamma_from_cone_angle(0.0) == 1.0);
  CHECK(gamma_from_cone_angle(M_PI / 2) == doctest::Approx(0.0));
  CHECK_THROWS_AS(gamma_from_cone_angle(2.0), ParameterError);
  CHECK_THROWS_AS(cone_angle_from_gamma(-0.5), ParameterError);
}

TEST_CASE("synthetic basis: isotropic emitter is equally bright in both channels") {
  const auto& b = test::default_basis();
  const double x = b.channel_energy(0, Channel::XPol) + b.channel_energy(1, Channel::XPol) +
                   b.channel_energy(2, Channel::XPol);
  const double y = b.channel_energy(0, Channel::YPol) + b.channel_energy(1, Channel::YPol) +
                   b.channel_energy(2, Channel::YPol);
  CHECK(x == doctest::Approx(y).epsilon(1e-9));
  CHECK(b.energy(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(b.image(6, Channel::XPol), ShapeError);
}

TEST_CASE("cubic interpolation reproduces samples and central-difference slopes") {
  const auto& b = test::default_basis();
  const auto plane = b.image(0, Channel::XPol);
  const auto shifted = b.shifted_plane(plane, 0.0, 0.0);
  const int w = b.width();
  for (int r = 1; r < b.height() - 1; ++r)
    for (int c = 1; c < w - 1; ++c)
      CHECK(shifted[static_cast<std::size_t>(r) * (w + 1) + c] == doctest::Approx(plane[r * w + c]).epsilon(1e-12));
  CHECK(keys_weight(0.0) == 1.0);
  CHECK(keys_weight(1.0) == 0.0);
  CHECK(keys_weight(2.5) == 0.0);
}

TEST_CASE("on-grid emitter renders exactly as the linear model") {
  const auto op = test::make_op(11, 11);
  const auto& g = op.geometry();
  const int i = (g.grid_height / 2) * g.grid_width + g.grid_width / 2;
  const auto m = moments_from_cone(1.0, 0.5, 0.7);
  const Emitter e{3000.0, g.grid_point(i), m};
  const auto frame = render_scene(std::vector<Emitter>{e}, op, Background(2.0));
  JointSignal f(op.grid_size());
  for (int j = 0; j < kNumBases; ++j) f.eta(i, j) = 3000.0 * m.m[j];
  std::vector<double> model(op.pixel_count());
  op.apply(f, model);
  for (std::size_t p = 0; p < model.size(); ++p) CHECK(frame.pixels[p] == doctest::Approx(model[p] + 2.0).epsilon(1e-9));
}

namespace {

// Residual norm of the first-order model for an emitter offset from grid point i.
double taylor_residual(const DesignOperator& op, const SecondMoments& m, double delta_subpx) {
  const auto& g = op.geometry();
  const int i = (g.grid_height / 2) * g.grid_width + g.grid_width / 2;
  {
    Position r = g.grid_point(i);
    r.x_nm += delta_subpx * g.subpixel_nm();
    r.y_nm -= 0.5 * delta_subpx * g.subpixel_nm();
    const auto frame = render_scene(std::vector<Emitter>{Emitter{1000.0, r, m}}, op, Background(0.0));
    JointSignal f(op.grid_size());
    for (int j = 0; j < kNumBases; ++j) f.eta(i, j) = 1000.0 * m.m[j];
    for (int j = 0; j < kNumShiftedBases; ++j) {
      f.zeta_x(i, j) = f.eta(i, j) * delta_subpx;
      f.zeta_y(i, j) = -0.5 * f.eta(i, j) * delta_subpx;
    }
    std::vector<double> model(op.pixel_count());
    op.apply(f, model);
    return norm2(minus(frame.pixels, model));
  }
}

}  // namespace

TEST_CASE("first-order shift terms leave a second-order residual") {
  const auto op = test::make_op(11, 11);
  // Diagonal moments only excite the shifted bases.
  const SecondMoments diag{{0.6, 0.3, 0.1, 0.0, 0.0, 0.0}};
  const double r1 = taylor_residual(op, diag, 0.4), r2 = taylor_residual(op, diag, 0.2),
               r3 = taylor_residual(op, diag, 0.1);
  CHECK(r1 / r2 > 3.5);
  CHECK(r2 / r3 > 3.5);
  // Cross moments have no shift terms, so their residual stays first order.
  const auto cross = moments_from_cone(M_PI / 2, 1.1, 0.5);
  const double c1 = taylor_residual(op, cross, 0.4), c2 = taylor_residual(op, cross, 0.2);
  CHECK(c1 / c2 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("render rejects emitters outside the region or with negative photons") {
  const auto op = test::make_op(9, 9);
  const double edge = op.geometry().r_max_x_nm();
  CHECK_THROWS_AS(render_scene(std::vector<Emitter>{Emitter{100.0, {edge + 1.0, 0.0}}}, op, Background(0.0)),
                  PlacementError);
  CHECK_THROWS_AS(render_scene(std::vector<Emitter>{Emitter{-1.0, {0.0, 0.0}}}, op, Background(0.0)),
                  PlacementError);
  CHECK_THROWS_AS(render_scene({}, op, Background(std::vector<double>(3, 1.0))), ShapeError);
}

TEST_CASE("Poisson sampler matches mean and variance and is seed-deterministic") {
  Frame mean(60, 50, 20.0);
  const auto a = sample_poisson(mean, 42);
  const auto b = sample_poisson(mean, 42);
  CHECK(a.pixels == b.pixels);
  CHECK(sample_poisson(mean, 43).pixels != a.pixels);
  const double n = static_cast<double>(a.size());
  double s = 0.0, s2 = 0.0;
  for (double v : a.pixels) {
    CHECK(v == std::floor(v));
    s += v;
    s2 += v * v;
  }
  const double m = s / n, var = s2 / n - m * m;
  CHECK(std::abs(m - 20.0) < 4.0 * std::sqrt(20.0 / n));
  // Variance of the sample variance is about 2 lambda^2 / n for large lambda.
  CHECK(std::abs(var - 20.0) < 4.0 * std::sqrt((2.0 * 400.0 + 20.0) / n));
  Frame bad(2, 2, 1.0);
  bad.pixels[3] = -1.0;
  CHECK_THROWS_AS(sample_poisson(bad, 1), DomainError);
}

TEST_CASE("channel misalignment moves only the y-pol centroid") {
  const auto op = test::make_op(15, 15);
  const auto frame =
      render_scene(std::vector<Emitter>{Emitter{5000.0, {0.0, 0.0}, SecondMoments{{1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 0, 0}}}},
                   op, Background(0.0));
  const auto shifted = apply_channel_misalignment(frame, ChannelShift{1.0, 0.0});
  CHECK(centroid_x(shifted, Channel::XPol) == doctest::Approx(centroid_x(frame, Channel::XPol)).epsilon(1e-12));
  CHECK(centroid_x(shifted, Channel::YPol) - centroid_x(frame, Channel::YPol) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_THROWS_AS(apply_channel_misalignment(frame, ChannelShift{2.5, 0.0}), ParameterError);
}

TEST_CASE("operator rejects grids that do not tile the region") {
  CHECK_THROWS_AS(test::make_op(0, 5), ConfigError);
  CHECK_THROWS_AS(test::make_op(5, 5, 3), ConfigError);
  const auto op = test::make_op(6, 6, 8);
  CHECK(op.grid_size() == 9);
  CHECK(op.geometry().rho_subpx() == 4.0);
}
