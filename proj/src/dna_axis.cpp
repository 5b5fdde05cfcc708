#include "sbd/dna_axis.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>

#include <Eigen/Dense>

#include "sbd/errors.hpp"

namespace sbd {

namespace {

double fold_pi(double a) {
  a = std::fmod(a, std::numbers::pi);
  return a < 0.0 ? a + std::numbers::pi : a;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

DnaAxisFit fit_dna_axis(std::span<const LocalizationRow> rows, int degree) {
  if (degree < 1) throw ParameterError("polynomial degree must be >= 1");
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n <= degree) throw ParameterError("need more localizations than polynomial coefficients");

  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i) = rows[static_cast<std::size_t>(i)].estimate.r.x_nm;
    y(i) = rows[static_cast<std::size_t>(i)].estimate.r.y_nm;
  }
  const auto spread = [](const Eigen::VectorXd& v) { return (v.array() - v.mean()).square().sum(); };
  DnaAxisFit fit;
  fit.y_of_x = spread(x) >= spread(y);
  const Eigen::VectorXd& u = fit.y_of_x ? x : y;
  const Eigen::VectorXd& w = fit.y_of_x ? y : x;

  // Center and scale the abscissa so the Vandermonde matrix stays well conditioned.
  const double mu = u.mean();
  const double sd = std::max(std::sqrt(spread(u) / static_cast<double>(n)), 1e-12);
  Eigen::MatrixXd V(n, degree + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (u(i) - mu) / sd;
    double p = 1.0;
    for (int k = 0; k <= degree; ++k, p *= t) V(i, k) = p;
  }
  const Eigen::VectorXd c = V.colPivHouseholderQr().solve(w);

  // Expand back to polynomial coefficients in the raw coordinate.
  fit.coefficients.assign(static_cast<std::size_t>(degree) + 1, 0.0);
  for (int k = 0; k <= degree; ++k) {
    // ((u - mu)/sd)^k = sum_m C(k, m) u^m (-mu)^(k-m) / sd^k
    double ck = 1.0;
    for (int m = 0; m <= k; ++m) {
      if (m > 0) ck = ck * (k - m + 1) / m;
      fit.coefficients[static_cast<std::size_t>(m)] += c(k) * ck * std::pow(-mu, k - m) / std::pow(sd, k);
    }
  }

  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (u(i) - mu) / sd;
    double slope = 0.0;
    double p = 1.0;
    for (int k = 1; k <= degree; ++k, p *= t) slope += k * c(k) * p / sd;
    const double tangent = fit.y_of_x ? std::atan(slope) : std::atan2(1.0, slope);
    fit.tangent_rad.push_back(fold_pi(tangent));
    const double d = fold_pi(rows[static_cast<std::size_t>(i)].estimate.phi - tangent);
    fit.delta_phi_rad.push_back(d);
    sum += d;
  }
  fit.mean_delta_phi_rad = sum / static_cast<double>(n);
  double var = 0.0;
  for (double d : fit.delta_phi_rad) var += (d - fit.mean_delta_phi_rad) * (d - fit.mean_delta_phi_rad);
  fit.std_delta_phi_rad = std::sqrt(var / static_cast<double>(n));
  return fit;
}

MetricList run_dna_axis(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate("dna-axis");
  const auto rows = read_localizations(cfg.input);
  const auto fit = fit_dna_axis(rows, cfg.dna_degree);
  if (!cfg.output.empty()) {
    std::ofstream out(cfg.output);
    if (!out) throw FormatError("io.output", "cannot write " + cfg.output);
    out << "frame_index,x_nm,y_nm,phi_rad,tangent_rad,delta_phi_rad\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& e = rows[i].estimate;
      out << rows[i].frame << ',' << fmt(e.r.x_nm) << ',' << fmt(e.r.y_nm) << ',' << fmt(e.phi) << ','
          << fmt(fit.tangent_rad[i]) << ',' << fmt(fit.delta_phi_rad[i]) << '\n';
    }
  }
  log << "fitted degree " << cfg.dna_degree << " axis through " << rows.size() << " localizations\n";
  MetricList m{{"localizations", std::to_string(rows.size())},
               {"axis", fit.y_of_x ? "y_of_x" : "x_of_y"},
               {"mean_delta_phi_deg", fmt(fit.mean_delta_phi_rad * 180.0 / std::numbers::pi)},
               {"std_delta_phi_deg", fmt(fit.std_delta_phi_rad * 180.0 / std::numbers::pi)}};
  for (std::size_t k = 0; k < fit.coefficients.size(); ++k) {
    m.emplace_back("coefficient_" + std::to_string(k), fmt(fit.coefficients[k]));
  }
  return m;
}

}  // namespace sbd
