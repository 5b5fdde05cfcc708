#include "sbd/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "sbd/errors.hpp"

namespace sbd {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an integer, got '" + v + "'");
}

bool to_bool(const std::string& key, std::string v) {
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&)>;

template <class T>
Setter real(T PipelineConfig::*field) {
  return [field](PipelineConfig& c, const std::string& k, const std::string& v) { c.*field = to_double(k, v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"basis.path", [](PipelineConfig& c, const std::string&, const std::string& v) { c.basis_path = v; }},
      {"basis.oversampling",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.basis.oversampling = static_cast<int>(to_int(k, v)); }},
      {"basis.pixel_size_nm",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.basis.pixel_size_nm = to_double(k, v); }},
      {"camera.pixel_size_nm",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.basis.pixel_size_nm = to_double(k, v); }},
      {"basis.sigma_px", [](PipelineConfig& c, const std::string& k, const std::string& v) { c.basis.sigma_px = to_double(k, v); }},
      {"basis.lobe_radius_px",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.basis.lobe_radius_px = to_double(k, v); }},
      {"basis.extent_px",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.basis.extent_px = static_cast<int>(to_int(k, v)); }},
      {"camera.width_px",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.width_px = static_cast<int>(to_int(k, v)); }},
      {"camera.height_px",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.height_px = static_cast<int>(to_int(k, v)); }},
      {"grid.step_subpx",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.grid_step_subpx = static_cast<int>(to_int(k, v)); }},
      {"solver.lambda", [](PipelineConfig& c, const std::string& k, const std::string& v) { c.analysis.solver.lambda = to_double(k, v); }},
      {"solver.lambda0", [](PipelineConfig& c, const std::string& k, const std::string& v) { c.analysis.solver.lambda0 = to_double(k, v); }},
      {"solver.tau", [](PipelineConfig& c, const std::string& k, const std::string& v) { c.analysis.solver.tau = to_double(k, v); }},
      {"solver.max_iterations",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.analysis.solver.max_iterations = static_cast<int>(to_int(k, v)); }},
      {"solver.tolerance",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.analysis.solver.tolerance = to_double(k, v); }},
      {"solver.patience",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.analysis.solver.patience = static_cast<int>(to_int(k, v)); }},
      {"solver.step_rule",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         if (v == "backtracking") {
           c.analysis.solver.step_rule = StepRule::Backtracking;
         } else if (v == "fixed") {
           c.analysis.solver.step_rule = StepRule::Fixed;
         } else {
           throw ConfigError(k + ": expected 'backtracking' or 'fixed', got '" + v + "'");
         }
       }},
      {"solver.initial_step",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.analysis.solver.initial_step = to_double(k, v); }},
      {"solver.backtrack_factor",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.analysis.solver.backtrack_factor = to_double(k, v); }},
      {"solver.step_growth",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.analysis.solver.step_growth = to_double(k, v); }},
      {"detect.threshold",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.analysis.detection.threshold = to_double(k, v); }},
      {"detect.min_separation",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.analysis.detection.min_separation = static_cast<int>(to_int(k, v));
       }},
      {"detect.pooling", [](PipelineConfig& c, const std::string& k, const std::string& v) { c.analysis.pooling = to_bool(k, v); }},
      {"detect.gradmap_floor",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.analysis.gradmap_floor = to_double(k, v); }},
      {"refine.max_iterations",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.analysis.refine.max_iterations = static_cast<int>(to_int(k, v)); }},
      {"refine.tolerance",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.analysis.refine.tolerance = to_double(k, v); }},
      {"refine.stall_window",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.analysis.refine.stall_window = static_cast<int>(to_int(k, v)); }},
      {"background.mode",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         if (v == "fixed") {
           c.analysis.background_mode = BackgroundMode::Fixed;
         } else if (v == "border-median") {
           c.analysis.background_mode = BackgroundMode::BorderMedian;
         } else {
           throw ConfigError(k + ": expected 'fixed' or 'border-median', got '" + v + "'");
         }
       }},
      {"background.value",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.analysis.background = to_double(k, v); }},
      {"io.input", [](PipelineConfig& c, const std::string&, const std::string& v) { c.input = v; }},
      {"io.output", [](PipelineConfig& c, const std::string&, const std::string& v) { c.output = v; }},
      {"io.scene", [](PipelineConfig& c, const std::string&, const std::string& v) { c.scene = v; }},
      {"io.truth", [](PipelineConfig& c, const std::string&, const std::string& v) { c.truth = v; }},
      {"io.render", [](PipelineConfig& c, const std::string&, const std::string& v) { c.render = v; }},
      {"io.diagnostics", [](PipelineConfig& c, const std::string&, const std::string& v) { c.diagnostics = v; }},
      {"io.render_bin_px", real(&PipelineConfig::render_bin_px)},
      {"simulate.frames",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.frames = static_cast<int>(to_int(k, v)); }},
      {"simulate.background", real(&PipelineConfig::sim_background)},
      {"simulate.shift_x_px",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.misalignment.dx_px = to_double(k, v); }},
      {"simulate.shift_y_px",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.misalignment.dy_px = to_double(k, v); }},
      {"benchmark.experiment", [](PipelineConfig& c, const std::string&, const std::string& v) { c.experiment = v; }},
      {"benchmark.trials",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.trials = static_cast<int>(to_int(k, v)); }},
      {"benchmark.photons", real(&PipelineConfig::photons)},
      {"benchmark.background", real(&PipelineConfig::bench_background)},
      {"benchmark.match_radius_nm", real(&PipelineConfig::match_radius_nm)},
      {"run.seed",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         const long long s = to_int(k, v);
         if (s < 0) throw ConfigError(k + ": must be >= 0");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"run.threads",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.threads = static_cast<int>(to_int(k, v)); }},
      {"dna.degree",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.dna_degree = static_cast<int>(to_int(k, v)); }},
  };
  return table;
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  const auto& table = setters();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError(key + ": unknown configuration key");
  it->second(*this, key, value);
}

void PipelineConfig::validate(const std::string& command) const {
  const auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  if (basis_path.empty()) {
    need(basis.oversampling >= 1, "basis.oversampling: must be >= 1");
    need(basis.pixel_size_nm > 0.0, "basis.pixel_size_nm: must be positive");
    need(basis.sigma_px > 0.0, "basis.sigma_px: must be positive");
    need(basis.extent_px >= 0, "basis.extent_px: must be >= 0");
  } else {
    need(std::filesystem::exists(basis_path), "basis.path: no such file " + basis_path);
  }
  need(width_px >= 3, "camera.width_px: must be >= 3");
  need(height_px >= 3, "camera.height_px: must be >= 3");
  need(grid_step_subpx >= 0, "grid.step_subpx: must be >= 0");
  need(render_bin_px > 0.0, "io.render_bin_px: must be positive");
  need(frames >= 0, "simulate.frames: must be >= 0");
  need(sim_background >= 0.0, "simulate.background: must be >= 0");
  need(analysis.background >= 0.0, "background.value: must be >= 0");
  need(analysis.gradmap_floor >= 0.0, "detect.gradmap_floor: must be >= 0");
  need(analysis.refine.max_iterations >= 1, "refine.max_iterations: must be >= 1");
  need(analysis.refine.tolerance > 0.0 && analysis.refine.tolerance < 1.0,
       "refine.tolerance: must lie in (0, 1)");
  need(analysis.refine.stall_window >= 0, "refine.stall_window: must be >= 0");
  need(threads >= 1, "run.threads: must be >= 1");
  need(trials >= 0, "benchmark.trials: must be >= 0");
  need(photons >= 0.0, "benchmark.photons: must be >= 0");
  need(bench_background >= 0.0, "benchmark.background: must be >= 0");
  need(dna_degree >= 1 && dna_degree <= 10, "dna.degree: must lie in 1..10");
  need(analysis.detection.threshold > 0.0 && analysis.detection.threshold < 1.0,
       "detect.threshold: must lie in (0, 1)");
  need(analysis.detection.min_separation >= 1, "detect.min_separation: must be >= 1");
  SolverConfig s = analysis.solver;
  s.background = Background(1.0);
  s.validate();

  if (command == "reconstruct") {
    need(!input.empty(), "io.input: required for reconstruct");
    need(std::filesystem::exists(input), "io.input: no such file " + input);
    need(!output.empty(), "io.output: required for reconstruct");
  } else if (command == "simulate") {
    need(!scene.empty(), "io.scene: required for simulate");
    need(std::filesystem::exists(scene), "io.scene: no such file " + scene);
    need(!output.empty(), "io.output: required for simulate");
  } else if (command == "dna-axis") {
    need(!input.empty(), "io.input: required for dna-axis");
    need(std::filesystem::exists(input), "io.input: no such file " + input);
  } else if (command == "benchmark") {
    static const char* known[] = {"sweep", "noisy", "orientation", "misalignment", "overlap", "stack"};
    need(std::find(std::begin(known), std::end(known), experiment) != std::end(known),
         "benchmark.experiment: unknown experiment '" + experiment + "'");
  }
}

void apply_config_text(PipelineConfig& cfg, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
    cfg.set(key, trim(line.substr(eq + 1)));
  }
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  PipelineConfig cfg;
  apply_config_text(cfg, ss.str(), path.string());
  return cfg;
}

}  // namespace sbd
