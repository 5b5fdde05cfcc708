#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sbd/design_operator.hpp"
#include "sbd/detect.hpp"
#include "sbd/forward_model.hpp"
#include "sbd/joint_signal.hpp"
#include "sbd/moments.hpp"

namespace sbd {

/// Bit flags attached to an estimate.
enum EstimateFlag : std::uint32_t {
  kFlagNone = 0,
  kFlagStalled = 1u << 0,
  kFlagOrientationIndeterminate = 1u << 1,
  kFlagNotConverged = 1u << 2,
};

struct EmitterEstimate {
  double s = 0.0;
  Position r;
  std::array<double, kNumBases> eta{};
  SecondMoments M;
  double theta = 0.0;
  double phi = 0.0;
  double gamma = 0.0;
  double cone_half_angle = 0.0;
  double nll = 0.0;       ///< final NLL of the whole frame fit
  int support_size = 0;   ///< groups in the joint fit
  int grid_index = 0;
  std::uint32_t flags = kFlagNone;
};

struct RefineOptions {
  int max_iterations = 2000;
  double tolerance = 1e-9;
  int patience = 5;
  /// Iterations without objective decrease before giving up.
  int stall_window = 50;
  double indeterminate_gap = 1e-3;
};

struct RefineResult {
  std::vector<EmitterEstimate> emitters;
  JointSignal signal;
  std::vector<int> support;
  double initial_nll = 0.0;
  double final_nll = 0.0;
  int iterations = 0;
  bool converged = false;
  bool stalled = false;
};

/// Initial point for the refinement: one group per detection, placed in the
/// grid cell containing its initial position, with zeta = eta * offset.
/// Detections that share a cell are merged.
JointSignal refine_initial_point(std::span<const Detection> detections, const GridGeometry& geom,
                                 std::vector<int>& support);

/// Unregularized Poisson maximum likelihood restricted to the support and
/// the cone constraints, started from refine_initial_point. Emitters whose
/// refined brightness vanishes are dropped from the result.
RefineResult refine_mle(std::span<const double> counts, const DesignOperator& op,
                        const Background& background, std::span<const Detection> detections,
                        const RefineOptions& options = {});

}  // namespace sbd
