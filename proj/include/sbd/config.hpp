#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sbd/basis.hpp"
#include "sbd/detect.hpp"
#include "sbd/forward_model.hpp"
#include "sbd/refine.hpp"
#include "sbd/solver.hpp"

namespace sbd {

enum class BackgroundMode { Fixed, BorderMedian };

/// Per-frame reconstruction settings shared by the CLI and the experiment harness.
struct AnalysisOptions {
  SolverConfig solver;
  DetectionOptions detection;
  RefineOptions refine;
  /// Detect on the mean of the three GradMaps; otherwise on each map
  /// separately, keeping the union.
  bool pooling = true;
  /// Photon floor of the GradMap normalization.
  double gradmap_floor = 50.0;
  BackgroundMode background_mode = BackgroundMode::BorderMedian;
  double background = 5.0;  ///< used in Fixed mode
};

/// Flat "section.key = value" configuration. Every field has a default, so
/// an empty file is valid for the simulate and benchmark commands.
struct PipelineConfig {
  // basis
  std::string basis_path;  ///< empty selects the synthetic generator
  BasisGeneratorParams basis;
  // camera and grid
  int width_px = 15;
  int height_px = 15;
  int grid_step_subpx = 0;
  // reconstruction
  AnalysisOptions analysis;
  // io
  std::string input;
  std::string output;
  std::string scene;
  std::string truth;
  std::string render;
  std::string diagnostics;
  double render_bin_px = 0.25;
  // simulate
  int frames = 1;
  double sim_background = 5.0;
  ChannelShift misalignment;
  // benchmark
  std::string experiment = "sweep";
  int trials = 0;  ///< 0 selects the experiment's default
  double photons = 0.0;
  double bench_background = 5.0;
  double match_radius_nm = -1.0;  ///< negative selects 2 rho
  // run
  std::uint64_t seed = 1;
  int threads = 1;
  // dna-axis
  int dna_degree = 3;

  /// Assigns one key; throws ConfigError naming the key on unknown keys or
  /// unparsable values.
  void set(const std::string& key, const std::string& value);
  /// Range checks plus the paths a command needs. Throws ConfigError.
  void validate(const std::string& command) const;
};

/// Reads "key = value" lines; '#' starts a comment. Keys may also be given
/// under a "[section]" header.
PipelineConfig load_config(const std::filesystem::path& path);
void apply_config_text(PipelineConfig& cfg, const std::string& text, const std::string& origin);

}  // namespace sbd
