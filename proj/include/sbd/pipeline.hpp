#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sbd/basis.hpp"
#include "sbd/config.hpp"
#include "sbd/design_operator.hpp"
#include "sbd/detect.hpp"
#include "sbd/forward_model.hpp"
#include "sbd/gradmap.hpp"
#include "sbd/io.hpp"
#include "sbd/refine.hpp"
#include "sbd/solver.hpp"

namespace sbd {

/// Median of the outermost ring of pixels of both channels.
double border_median(const Frame& frame);

struct FrameAnalysis {
  double background = 0.0;
  DeconvolutionResult deconvolution;
  /// Unnormalized GradMap scores of bases 1..3.
  std::array<GradMapImage, kNumShiftedBases> scores;
  /// Normalized pooled map (pooling) or the first normalized basis map.
  GradMapImage map;
  std::vector<Detection> detections;
  RefineResult refined;
};

/// Detections on a deconvolved signal. With pooling the three score maps are
/// averaged and normalized by max(peak, floor); otherwise each map is
/// normalized on its own and the detections are merged.
std::vector<Detection> detect_emitters(const JointSignal& f, const GridGeometry& geom,
                                       const AnalysisOptions& options,
                                       std::array<GradMapImage, kNumShiftedBases>* scores = nullptr,
                                       GradMapImage* map = nullptr);

/// deconvolve -> GradMaps -> support detection -> constrained refinement.
FrameAnalysis analyze_frame(const Frame& frame, const DesignOperator& op, const AnalysisOptions& options,
                            const IterateObserver& observer = {});

struct FrameOutcome {
  int frame = 0;
  bool ok = false;
  std::string message;
  std::vector<EmitterEstimate> emitters;
  int solver_iterations = 0;
};

/// Runs analyze_frame over a stack with at most `threads` workers. Results
/// are ordered by frame index; missing frames and frames whose analysis
/// throws come back with ok = false and a message.
std::vector<FrameOutcome> process_frames(std::span<const std::optional<Frame>> frames,
                                         const DesignOperator& op, const AnalysisOptions& options,
                                         int threads);

BasisStack make_basis(const PipelineConfig& cfg);
DesignOperator make_operator(const PipelineConfig& cfg, const BasisStack& basis);

struct RunSummary {
  int frames = 0;
  int processed = 0;
  std::vector<int> failed;
  std::size_t rows = 0;
};

/// Localization table (io.output), optional density image (io.render) and
/// solver diagnostics (io.diagnostics). Warnings go to log.
RunSummary run_reconstruct(const PipelineConfig& cfg, std::ostream& log);
/// Noisy frame stack (io.output) plus ground truth (io.truth, default
/// <output>.truth.csv) from a scene file.
RunSummary run_simulate(const PipelineConfig& cfg, std::ostream& log);

using MetricList = std::vector<std::pair<std::string, std::string>>;
/// Runs benchmark.experiment and returns its metrics report.
MetricList run_benchmark(const PipelineConfig& cfg, std::ostream& log);

/// Localization counts in bins of bin_px camera pixels over the region.
std::vector<std::uint16_t> render_histogram(std::span<const LocalizationRow> rows, const GridGeometry& geom,
                                            double bin_px, int& width, int& height);

// ---- synthetic experiment harness -------------------------------------

/// Greedy one-to-one matching of closest pairs within radius_nm.
struct MatchResult {
  std::vector<std::pair<int, int>> pairs;  ///< (truth, estimate)
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
};
MatchResult match_nearest(std::span<const Position> truth, std::span<const Position> estimates,
                          double radius_nm);

struct ExperimentSetup {
  const DesignOperator* op = nullptr;
  AnalysisOptions analysis;
  std::uint64_t seed = 1;
  double match_radius_nm = -1.0;  ///< negative selects 2 rho
  double background = 5.0;
  bool noisy = true;
  ChannelShift misalignment;  ///< applied to rendered frames only
  /// Also run non-pooled detection on the same deconvolution.
  bool per_basis = false;
};

struct ExperimentMetrics {
  int trials = 0;
  int truth_count = 0;
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double rms_position_nm = 0.0;
  double max_position_nm = 0.0;
  double max_brightness_rel = 0.0;
  double moment_rmse = 0.0;
  double gamma_bias = 0.0;
  double rms_theta_rad = 0.0;
  double rms_phi_rad = 0.0;  ///< axial difference for in-plane dipoles
  double rms_gamma = 0.0;
  /// Trials whose estimate count equals the true count / exceeds it.
  int exact_count_trials = 0;
  int over_count_trials = 0;
  /// Same counts for non-pooled detection (per_basis only).
  int per_basis_exact_trials = 0;
  int per_basis_over_trials = 0;
  bool degenerate_radius = false;
  int infeasible_estimates = 0;
  double seconds = 0.0;
};

using SceneGenerator = std::function<std::vector<Emitter>(int trial, std::mt19937_64& rng)>;

/// Renders, optionally misaligns and samples each trial, reconstructs it and
/// scores the estimates against the generated emitters.
ExperimentMetrics run_trials(const ExperimentSetup& setup, int trials, const SceneGenerator& scene);

/// Noiseless 3x3 sweep of sub-pixel offsets {-rho/2, 0, rho/2} around the
/// central grid point.
ExperimentMetrics offset_sweep(const ExperimentSetup& setup, double photons, const ConeOrientation& o);
/// Noisy single emitter at a random offset within one grid cell.
ExperimentMetrics noisy_single(const ExperimentSetup& setup, int trials, double photons, const ConeOrientation& o);
/// In-plane dipoles with random azimuth and gamma in [0.5, 1].
ExperimentMetrics orientation_trials(const ExperimentSetup& setup, int trials, double photons);
/// Isotropic bead with the y-pol channel misaligned by setup.misalignment.
ExperimentMetrics misalignment_trials(const ExperimentSetup& setup, int trials, double photons);
/// Two emitters separation_nm apart with different orientations.
ExperimentMetrics overlap_trials(const ExperimentSetup& setup, int trials, double photons, double separation_nm);

MetricList to_metric_list(const ExperimentMetrics& m);

}  // namespace sbd
