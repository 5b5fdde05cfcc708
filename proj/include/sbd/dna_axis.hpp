#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "sbd/io.hpp"
#include "sbd/pipeline.hpp"

namespace sbd {

/// Polynomial strand axis through a set of localizations and the in-plane
/// angle of each dipole relative to its local tangent.
struct DnaAxisFit {
  /// Coefficients c_0..c_d of the fitted polynomial, lowest order first.
  std::vector<double> coefficients;
  /// True when y is fitted as a function of x; false for x(y).
  bool y_of_x = true;
  std::vector<double> tangent_rad;  ///< local axis direction in [0, pi)
  std::vector<double> delta_phi_rad;  ///< (phi - tangent) folded into [0, pi)
  double mean_delta_phi_rad = 0.0;
  double std_delta_phi_rad = 0.0;
};

/// Least-squares fit of the given degree. The independent variable is the
/// coordinate with the larger spread. Throws ParameterError when there are
/// not more points than coefficients.
DnaAxisFit fit_dna_axis(std::span<const LocalizationRow> rows, int degree);

/// Reads io.input, writes per-localization angles to io.output when set and
/// returns summary metrics.
MetricList run_dna_axis(const PipelineConfig& cfg, std::ostream& log);

}  // namespace sbd
