// Command-line front end: simulate, reconstruct, benchmark, dna-axis.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sbd/config.hpp"
#include "sbd/dna_axis.hpp"
#include "sbd/errors.hpp"
#include "sbd/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string input;
  std::string output;
  std::string scene;
  std::string report;
  int threads = 0;
  long long seed = -1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value configuration file");
  cmd->add_option("--set", c.overrides, "override one key, e.g. --set solver.lambda0=3")->take_all();
  cmd->add_option("-i,--input", c.input, "input path (io.input)");
  cmd->add_option("-o,--output", c.output, "output path (io.output)");
  cmd->add_option("--threads", c.threads, "worker threads (run.threads)");
  cmd->add_option("--seed", c.seed, "random seed (run.seed)");
}

sbd::PipelineConfig build_config(const Common& c) {
  sbd::PipelineConfig cfg = c.config.empty() ? sbd::PipelineConfig{} : sbd::load_config(c.config);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw sbd::ConfigError("--set " + kv + ": expected key=value");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!c.input.empty()) cfg.input = c.input;
  if (!c.output.empty()) cfg.output = c.output;
  if (!c.scene.empty()) cfg.scene = c.scene;
  if (c.threads > 0) cfg.threads = c.threads;
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  return cfg;
}

void emit_metrics(const sbd::MetricList& metrics, const std::string& path) {
  if (path.empty()) {
    sbd::write_metrics(std::cout, metrics);
    return;
  }
  std::ofstream out(path);
  if (!out) throw sbd::FormatError("--report", "cannot write " + path);
  sbd::write_metrics(out, metrics);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orientation-resolved single-molecule deconvolution"};
  app.require_subcommand(1);
  Common common;
  auto* simulate = app.add_subcommand("simulate", "render a noisy frame stack from a scene file");
  auto* reconstruct = app.add_subcommand("reconstruct", "localize emitters in a frame stack");
  auto* benchmark = app.add_subcommand("benchmark", "run a synthetic accuracy experiment");
  auto* dna = app.add_subcommand("dna-axis", "dipole angles relative to a fitted strand axis");
  for (auto* cmd : {simulate, reconstruct, benchmark, dna}) add_common(cmd, common);
  simulate->add_option("--scene", common.scene, "scene table (io.scene)");
  benchmark->add_option("--report", common.report, "metrics report path (stdout when omitted)");
  dna->add_option("--report", common.report, "summary report path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  sbd::PipelineConfig cfg;
  try {
    cfg = build_config(common);
  } catch (const sbd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (simulate->parsed()) {
      sbd::run_simulate(cfg, std::cerr);
    } else if (reconstruct->parsed()) {
      const auto summary = sbd::run_reconstruct(cfg, std::cerr);
      if (!summary.failed.empty()) {
        std::cerr << summary.failed.size() << " of " << summary.frames << " frames failed\n";
        return kExitPartial;
      }
    } else if (benchmark->parsed()) {
      emit_metrics(sbd::run_benchmark(cfg, std::cerr), common.report);
    } else if (dna->parsed()) {
      emit_metrics(sbd::run_dna_axis(cfg, std::cerr), common.report);
    }
  } catch (const sbd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
