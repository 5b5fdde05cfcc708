#pragma once

#include <array>
#include <span>
#include <vector>

#include "sbd/design_operator.hpp"
#include "sbd/gradmap.hpp"
#include "sbd/joint_signal.hpp"

namespace sbd {

struct DetectionOptions {
  double threshold = 0.3;  ///< in (0, 1)
  int min_separation = 2;  ///< Chebyshev distance in grid points

  void validate() const;
};

/// A local maximum of a GradMap with the initial estimates derived from the
/// 3x3 neighborhood of the deconvolved signal around it.
struct Detection {
  int grid_index = 0;
  double score = 0.0;
  double s = 0.0;  ///< sum of eta^1..eta^3 over the neighborhood
  Position r;      ///< photon-weighted neighborhood centroid
  /// Per-basis eta sums over the neighborhood (all six bases).
  std::array<double, kNumBases> eta{};
};

/// Local maxima (>= all 8 neighbors) at or above the threshold, reduced by
/// non-maximum suppression in descending score order. Equal scores are
/// visited by ascending grid index, so plateaus collapse to their first
/// point. Throws ParameterError for a threshold outside (0, 1).
std::vector<Detection> find_support(const GradMapImage& map, const JointSignal& f,
                                    const GridGeometry& geom, const DetectionOptions& options);

/// Detection on each map separately; the union keeps every distinct grid
/// point (coincident detections are reported once).
std::vector<Detection> find_support_each(std::span<const GradMapImage> maps, const JointSignal& f,
                                         const GridGeometry& geom, const DetectionOptions& options);

}  // namespace sbd
