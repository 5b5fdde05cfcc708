#include "sbd/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "sbd/errors.hpp"
#include "sbd/orientation.hpp"

namespace sbd {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k) {
  // splitmix64 step; keeps per-trial streams independent of each other.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (k + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double wrap_angle(double a, double period) {
  a = std::fmod(a, period);
  if (a > 0.5 * period) a -= period;
  if (a <= -0.5 * period) a += period;
  return a;
}

bool estimate_is_physical(const EmitterEstimate& e) {
  const double tr = e.M.trace();
  return e.s > 0.0 && e.gamma >= 0.0 && e.gamma <= 1.0 && std::abs(tr - 1.0) < 1e-10 &&
         e.M.min_eigenvalue() >= -1e-10 && e.theta >= 0.0 && e.theta <= 0.5 * kPi + 1e-12 &&
         e.phi > -kPi && e.phi <= kPi;
}

Position central_grid_point(const GridGeometry& g) {
  return g.grid_point((g.grid_height / 2) * g.grid_width + g.grid_width / 2);
}

}  // namespace

double border_median(const Frame& frame) {
  std::vector<double> ring;
  for (int c = 0; c < kNumChannels; ++c) {
    for (int r = 0; r < frame.height; ++r) {
      for (int x = 0; x < frame.width; ++x) {
        if (r == 0 || x == 0 || r == frame.height - 1 || x == frame.width - 1) {
          ring.push_back(frame.at(static_cast<Channel>(c), r, x));
        }
      }
    }
  }
  if (ring.empty()) return 0.0;
  const auto mid = ring.begin() + static_cast<std::ptrdiff_t>(ring.size() / 2);
  std::nth_element(ring.begin(), mid, ring.end());
  double m = *mid;
  if (ring.size() % 2 == 0) m = 0.5 * (m + *std::max_element(ring.begin(), mid));
  return m;
}

std::vector<Detection> detect_emitters(const JointSignal& f, const GridGeometry& geom,
                                       const AnalysisOptions& options,
                                       std::array<GradMapImage, kNumShiftedBases>* scores_out,
                                       GradMapImage* map_out) {
  std::array<GradMapImage, kNumShiftedBases> scores;
  for (int j = 0; j < kNumShiftedBases; ++j) scores[static_cast<std::size_t>(j)] = gradmap_scores(f, j, geom);
  std::vector<Detection> found;
  GradMapImage map;
  if (options.pooling) {
    map = normalize_gradmap(pool_gradmaps(scores[0], scores[1], scores[2]), options.gradmap_floor);
    found = find_support(map, f, geom, options.detection);
  } else {
    std::array<GradMapImage, kNumShiftedBases> maps;
    for (std::size_t j = 0; j < maps.size(); ++j) maps[j] = normalize_gradmap(scores[j], options.gradmap_floor);
    found = find_support_each(maps, f, geom, options.detection);
    map = maps[0];
  }
  if (scores_out != nullptr) *scores_out = std::move(scores);
  if (map_out != nullptr) *map_out = std::move(map);
  return found;
}

FrameAnalysis analyze_frame(const Frame& frame, const DesignOperator& op, const AnalysisOptions& options,
                            const IterateObserver& observer) {
  if (frame.size() != op.pixel_count()) throw ShapeError("frame does not match the operator");
  FrameAnalysis a;
  a.background = options.background_mode == BackgroundMode::Fixed ? options.background : border_median(frame);
  SolverConfig sc = options.solver;
  sc.background = Background(a.background);
  a.deconvolution = deconvolve(frame.pixels, op, sc, observer);
  a.detections = detect_emitters(a.deconvolution.signal, op.geometry(), options, &a.scores, &a.map);
  a.refined = refine_mle(frame.pixels, op, Background(a.background), a.detections, options.refine);
  return a;
}

std::vector<FrameOutcome> process_frames(std::span<const std::optional<Frame>> frames,
                                         const DesignOperator& op, const AnalysisOptions& options,
                                         int threads) {
  std::vector<FrameOutcome> out(frames.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (std::size_t k = next++; k < frames.size(); k = next++) {
      FrameOutcome& o = out[k];
      o.frame = static_cast<int>(k);
      if (!frames[k]) {
        o.message = "frame could not be read";
        continue;
      }
      try {
        auto a = analyze_frame(*frames[k], op, options);
        o.emitters = std::move(a.refined.emitters);
        o.solver_iterations = a.deconvolution.iterations;
        o.ok = true;
      } catch (const std::exception& e) {
        o.message = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(frames.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return out;
}

BasisStack make_basis(const PipelineConfig& cfg) {
  if (!cfg.basis_path.empty()) return load_basis(cfg.basis_path);
  return generate_synthetic_basis(cfg.basis);
}

DesignOperator make_operator(const PipelineConfig& cfg, const BasisStack& basis) {
  return DesignOperator(basis, GridSpec{cfg.width_px, cfg.height_px, cfg.grid_step_subpx});
}

std::vector<std::uint16_t> render_histogram(std::span<const LocalizationRow> rows, const GridGeometry& geom,
                                            double bin_px, int& width, int& height) {
  if (!(bin_px > 0.0)) throw ParameterError("render bin size must be positive");
  width = static_cast<int>(std::ceil(geom.image_width / bin_px));
  height = static_cast<int>(std::ceil(geom.image_height / bin_px));
  std::vector<std::uint16_t> img(static_cast<std::size_t>(width) * height, 0);
  for (const auto& r : rows) {
    const double px = r.estimate.r.x_nm / geom.pixel_size_nm + 0.5 * geom.image_width;
    const double py = r.estimate.r.y_nm / geom.pixel_size_nm + 0.5 * geom.image_height;
    const int bx = static_cast<int>(std::floor(px / bin_px));
    const int by = static_cast<int>(std::floor(py / bin_px));
    if (bx < 0 || by < 0 || bx >= width || by >= height) continue;
    auto& v = img[static_cast<std::size_t>(by) * width + bx];
    if (v < 65535) ++v;
  }
  return img;
}

RunSummary run_reconstruct(const PipelineConfig& config, std::ostream& log) {
  config.validate("reconstruct");
  FrameStack stack = read_frame_stack(config.input);
  PipelineConfig cfg = config;
  if (!stack.frames.empty()) {
    cfg.width_px = stack.width;
    cfg.height_px = stack.height;
  }
  const BasisStack basis = make_basis(cfg);
  if (stack.pixel_size_nm > 0.0 && std::abs(stack.pixel_size_nm - basis.pixel_size_nm()) > 1e-9) {
    log << "warning: stack pixel size " << stack.pixel_size_nm << " nm differs from basis pixel size "
        << basis.pixel_size_nm() << " nm\n";
  }
  for (const auto& [frame, why] : stack.problems) log << "warning: frame " << frame << " skipped: " << why << '\n';

  RunSummary summary;
  summary.frames = static_cast<int>(stack.frames.size());
  std::vector<LocalizationRow> rows;
  std::vector<FrameOutcome> outcomes;
  std::optional<DesignOperator> op;
  if (!stack.frames.empty()) {
    op.emplace(make_operator(cfg, basis));
    outcomes = process_frames(stack.frames, *op, cfg.analysis, cfg.threads);
  }
  for (const auto& o : outcomes) {
    if (!o.ok) {
      summary.failed.push_back(o.frame);
      if (stack.frames[static_cast<std::size_t>(o.frame)]) {
        log << "warning: frame " << o.frame << " failed: " << o.message << '\n';
      }
      continue;
    }
    ++summary.processed;
    for (const auto& e : o.emitters) rows.push_back({o.frame, e});
  }
  summary.rows = rows.size();

  std::ofstream table(cfg.output);
  if (!table) throw FormatError("io.output", "cannot write " + cfg.output);
  write_localizations(table, rows);
  if (!cfg.render.empty() && op) {
    int w = 0;
    int h = 0;
    const auto img = render_histogram(rows, op->geometry(), cfg.render_bin_px, w, h);
    write_tiff16(cfg.render, w, h, img);
  }
  if (!cfg.diagnostics.empty()) {
    std::ofstream diag(cfg.diagnostics);
    diag << "frame_index,solver_iterations,detections,status\n";
    for (const auto& o : outcomes) {
      diag << o.frame << ',' << o.solver_iterations << ',' << o.emitters.size() << ','
           << (o.ok ? "ok" : "failed") << '\n';
    }
  }
  log << "processed " << summary.processed << " of " << summary.frames << " frames, " << summary.rows
      << " localizations\n";
  return summary;
}

RunSummary run_simulate(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate("simulate");
  const auto scene = read_scene(cfg.scene);
  const BasisStack basis = make_basis(cfg);
  const DesignOperator op = make_operator(cfg, basis);
  const auto& geom = op.geometry();
  for (std::size_t k = 0; k < scene.size(); ++k) {
    if (!geom.contains(scene[k].emitter.r)) {
      throw PlacementError("scene record " + std::to_string(k) + " lies outside the region of interest");
    }
    if (scene[k].frame >= cfg.frames) {
      log << "warning: scene record " << k << " names frame " << scene[k].frame << " beyond the stack\n";
    }
  }
  std::vector<Frame> frames;
  std::vector<TruthRow> truth;
  for (int f = 0; f < cfg.frames; ++f) {
    std::vector<Emitter> active;
    for (const auto& rec : scene) {
      if (rec.frame >= 0 && rec.frame != f) continue;
      active.push_back(rec.emitter);
      const auto& o = std::get<ConeOrientation>(rec.emitter.orientation);
      truth.push_back({f, rec.emitter.r.x_nm, rec.emitter.r.y_nm, rec.emitter.s, o.theta, o.phi, o.gamma});
    }
    Frame mean = render_scene(active, op, Background(cfg.sim_background));
    if (cfg.misalignment.dx_px != 0.0 || cfg.misalignment.dy_px != 0.0) {
      mean = apply_channel_misalignment(mean, cfg.misalignment);
    }
    frames.push_back(sample_poisson(mean, mix_seed(cfg.seed, static_cast<std::uint64_t>(f))));
  }
  write_frame_stack(cfg.output, frames, basis.pixel_size_nm());
  const std::string truth_path = cfg.truth.empty() ? cfg.output + ".truth.csv" : cfg.truth;
  std::ofstream t(truth_path);
  if (!t) throw FormatError("io.truth", "cannot write " + truth_path);
  write_truth(t, truth);
  log << "wrote " << frames.size() << " frames to " << cfg.output << " and ground truth to " << truth_path << '\n';
  RunSummary s;
  s.frames = s.processed = static_cast<int>(frames.size());
  s.rows = truth.size();
  return s;
}

MatchResult match_nearest(std::span<const Position> truth, std::span<const Position> estimates,
                          double radius_nm) {
  MatchResult m;
  struct Cand {
    double d;
    int t;
    int e;
  };
  std::vector<Cand> cands;
  if (radius_nm > 0.0) {
    for (std::size_t t = 0; t < truth.size(); ++t) {
      for (std::size_t e = 0; e < estimates.size(); ++e) {
        const double d = std::hypot(truth[t].x_nm - estimates[e].x_nm, truth[t].y_nm - estimates[e].y_nm);
        if (d <= radius_nm) cands.push_back({d, static_cast<int>(t), static_cast<int>(e)});
      }
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.d < b.d; });
  std::vector<char> tu(truth.size(), 0);
  std::vector<char> eu(estimates.size(), 0);
  for (const auto& c : cands) {
    if (tu[static_cast<std::size_t>(c.t)] || eu[static_cast<std::size_t>(c.e)]) continue;
    tu[static_cast<std::size_t>(c.t)] = eu[static_cast<std::size_t>(c.e)] = 1;
    m.pairs.emplace_back(c.t, c.e);
  }
  m.true_positives = static_cast<int>(m.pairs.size());
  m.false_negatives = static_cast<int>(truth.size()) - m.true_positives;
  m.false_positives = static_cast<int>(estimates.size()) - m.true_positives;
  return m;
}

ExperimentMetrics run_trials(const ExperimentSetup& setup, int trials, const SceneGenerator& scene) {
  if (setup.op == nullptr) throw ConfigError("experiment needs an operator");
  const DesignOperator& op = *setup.op;
  const auto& geom = op.geometry();
  const double radius = setup.match_radius_nm < 0.0 ? 2.0 * geom.rho_nm() : setup.match_radius_nm;
  const auto t0 = std::chrono::steady_clock::now();

  ExperimentMetrics m;
  m.trials = trials;
  m.degenerate_radius = !(radius > 0.0);
  double pos_sq = 0.0;
  double mom_sq = 0.0;
  double th_sq = 0.0;
  double ph_sq = 0.0;
  double ga_sq = 0.0;
  double ga_sum = 0.0;
  int matched = 0;
  AnalysisOptions per_basis = setup.analysis;
  per_basis.pooling = false;
  AnalysisOptions analysis = setup.analysis;
  analysis.pooling = true;

  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(mix_seed(setup.seed, 2 * static_cast<std::uint64_t>(t)));
    const auto emitters = scene(t, rng);
    Frame frame = render_scene(emitters, op, Background(setup.background));
    if (setup.misalignment.dx_px != 0.0 || setup.misalignment.dy_px != 0.0) {
      frame = apply_channel_misalignment(frame, setup.misalignment);
    }
    if (setup.noisy) frame = sample_poisson(frame, mix_seed(setup.seed, 2 * static_cast<std::uint64_t>(t) + 1));
    const auto a = analyze_frame(frame, op, analysis);
    const auto& est = a.refined.emitters;

    std::vector<Position> tp;
    std::vector<const Emitter*> te;
    for (const auto& e : emitters) {
      if (e.s > 0.0) {
        tp.push_back(e.r);
        te.push_back(&e);
      }
    }
    std::vector<Position> ep;
    for (const auto& e : est) {
      ep.push_back(e.r);
      if (!estimate_is_physical(e)) ++m.infeasible_estimates;
    }
    m.truth_count += static_cast<int>(tp.size());
    if (est.size() == tp.size()) ++m.exact_count_trials;
    if (est.size() > tp.size()) ++m.over_count_trials;
    if (setup.per_basis) {
      const auto dets = detect_emitters(a.deconvolution.signal, geom, per_basis);
      if (dets.size() == tp.size()) ++m.per_basis_exact_trials;
      if (dets.size() > tp.size()) ++m.per_basis_over_trials;
    }

    const auto match = match_nearest(tp, ep, radius);
    m.true_positives += match.true_positives;
    m.false_positives += match.false_positives;
    m.false_negatives += match.false_negatives;
    for (const auto& [ti, ei] : match.pairs) {
      const Emitter& truth = *te[static_cast<std::size_t>(ti)];
      const EmitterEstimate& e = est[static_cast<std::size_t>(ei)];
      const double d = std::hypot(truth.r.x_nm - e.r.x_nm, truth.r.y_nm - e.r.y_nm);
      pos_sq += d * d;
      m.max_position_nm = std::max(m.max_position_nm, d);
      m.max_brightness_rel = std::max(m.max_brightness_rel, std::abs(e.s - truth.s) / truth.s);
      const SecondMoments tm = truth.moments();
      for (std::size_t k = 0; k < 6; ++k) mom_sq += (e.M.m[k] - tm.m[k]) * (e.M.m[k] - tm.m[k]) / 6.0;
      if (const auto* o = std::get_if<ConeOrientation>(&truth.orientation)) {
        double theta = o->theta;
        double phi = o->phi;
        if (std::cos(theta) < 0.0) {
          theta = kPi - theta;
          phi += kPi;
        }
        const bool planar = std::abs(std::cos(theta)) < 1e-9;
        const double dphi = wrap_angle(e.phi - phi, planar ? kPi : 2.0 * kPi);
        th_sq += (e.theta - theta) * (e.theta - theta);
        ph_sq += dphi * dphi;
        ga_sq += (e.gamma - o->gamma) * (e.gamma - o->gamma);
        ga_sum += e.gamma - o->gamma;
      }
      ++matched;
    }
  }
  if (matched > 0) {
    m.rms_position_nm = std::sqrt(pos_sq / matched);
    m.moment_rmse = std::sqrt(mom_sq / matched);
    m.rms_theta_rad = std::sqrt(th_sq / matched);
    m.rms_phi_rad = std::sqrt(ph_sq / matched);
    m.rms_gamma = std::sqrt(ga_sq / matched);
    m.gamma_bias = ga_sum / matched;
  }
  const int est_total = m.true_positives + m.false_positives;
  m.precision = est_total > 0 ? static_cast<double>(m.true_positives) / est_total : 1.0;
  m.recall = m.truth_count > 0 ? static_cast<double>(m.true_positives) / m.truth_count : 1.0;
  m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

ExperimentMetrics offset_sweep(const ExperimentSetup& setup, double photons, const ConeOrientation& o) {
  ExperimentSetup s = setup;
  s.noisy = false;
  const auto& geom = setup.op->geometry();
  const Position c = central_grid_point(geom);
  const double h = 0.5 * geom.rho_nm();
  return run_trials(s, 9, [&](int t, std::mt19937_64&) {
    Emitter e;
    e.s = photons;
    e.r = {c.x_nm + (t % 3 - 1) * h, c.y_nm + (t / 3 - 1) * h};
    e.orientation = o;
    return std::vector<Emitter>{e};
  });
}

ExperimentMetrics noisy_single(const ExperimentSetup& setup, int trials, double photons, const ConeOrientation& o) {
  const auto& geom = setup.op->geometry();
  const Position c = central_grid_point(geom);
  const double rho = geom.rho_nm();
  return run_trials(setup, trials, [&](int, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> jitter(-rho, rho);
    Emitter e;
    e.s = photons;
    e.r = {c.x_nm + jitter(rng), c.y_nm + jitter(rng)};
    e.orientation = o;
    return std::vector<Emitter>{e};
  });
}

ExperimentMetrics orientation_trials(const ExperimentSetup& setup, int trials, double photons) {
  const auto& geom = setup.op->geometry();
  const Position c = central_grid_point(geom);
  const double h = 0.5 * geom.rho_nm();
  return run_trials(setup, trials, [&](int, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> jitter(-h, h);
    std::uniform_real_distribution<double> azimuth(-0.5 * kPi, 0.5 * kPi);
    std::uniform_real_distribution<double> constraint(0.5, 1.0);
    Emitter e;
    e.s = photons;
    e.r = {c.x_nm + jitter(rng), c.y_nm + jitter(rng)};
    const double phi = azimuth(rng);
    e.orientation = ConeOrientation{0.5 * kPi, phi, constraint(rng)};
    return std::vector<Emitter>{e};
  });
}

ExperimentMetrics misalignment_trials(const ExperimentSetup& setup, int trials, double photons) {
  ExperimentSetup s = setup;
  s.per_basis = true;
  const auto& geom = setup.op->geometry();
  const Position c = central_grid_point(geom);
  const double h = 0.5 * geom.rho_nm();
  return run_trials(s, trials, [&](int, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> jitter(-h, h);
    Emitter e;
    e.s = photons;
    e.r = {c.x_nm + jitter(rng), c.y_nm + jitter(rng)};
    e.orientation = ConeOrientation{0.0, 0.0, 0.0};
    return std::vector<Emitter>{e};
  });
}

ExperimentMetrics overlap_trials(const ExperimentSetup& setup, int trials, double photons, double separation_nm) {
  const auto& geom = setup.op->geometry();
  const Position c = central_grid_point(geom);
  const double h = 0.5 * geom.rho_nm();
  return run_trials(setup, trials, [&](int, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> jitter(-h, h);
    const double jx = jitter(rng);
    const double jy = jitter(rng);
    Emitter a;
    a.s = photons;
    a.r = {c.x_nm - 0.5 * separation_nm + jx, c.y_nm + jy};
    a.orientation = ConeOrientation{0.5 * kPi, 0.0, 1.0};
    Emitter b = a;
    b.r = {c.x_nm + 0.5 * separation_nm + jx, c.y_nm + jy};
    b.orientation = ConeOrientation{0.5 * kPi, 0.5 * kPi, 1.0};
    return std::vector<Emitter>{a, b};
  });
}

MetricList to_metric_list(const ExperimentMetrics& m) {
  const double t = std::max(1, m.trials);
  return {
      {"trials", std::to_string(m.trials)},
      {"truth_emitters", std::to_string(m.truth_count)},
      {"true_positives", std::to_string(m.true_positives)},
      {"false_positives", std::to_string(m.false_positives)},
      {"false_negatives", std::to_string(m.false_negatives)},
      {"precision", fmt(m.precision)},
      {"recall", fmt(m.recall)},
      {"rms_position_nm", fmt(m.rms_position_nm)},
      {"max_position_nm", fmt(m.max_position_nm)},
      {"max_brightness_rel_error", fmt(m.max_brightness_rel)},
      {"moment_rmse", fmt(m.moment_rmse)},
      {"gamma_bias", fmt(m.gamma_bias)},
      {"rms_theta_deg", fmt(m.rms_theta_rad * 180.0 / kPi)},
      {"rms_phi_deg", fmt(m.rms_phi_rad * 180.0 / kPi)},
      {"rms_gamma", fmt(m.rms_gamma)},
      {"exact_count_rate", fmt(m.exact_count_trials / t)},
      {"false_discovery_rate", fmt(m.over_count_trials / t)},
      {"per_basis_exact_count_rate", fmt(m.per_basis_exact_trials / t)},
      {"per_basis_false_discovery_rate", fmt(m.per_basis_over_trials / t)},
      {"infeasible_estimates", std::to_string(m.infeasible_estimates)},
      {"degenerate_match_radius", m.degenerate_radius ? "1" : "0"},
      {"seconds", fmt(m.seconds)},
  };
}

MetricList run_benchmark(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate("benchmark");
  const BasisStack basis = make_basis(cfg);
  const DesignOperator op = make_operator(cfg, basis);
  ExperimentSetup setup;
  setup.op = &op;
  setup.analysis = cfg.analysis;
  setup.analysis.background_mode = BackgroundMode::Fixed;
  setup.analysis.background = cfg.bench_background;
  setup.seed = cfg.seed;
  setup.match_radius_nm = cfg.match_radius_nm;
  setup.background = cfg.bench_background;
  const auto pick = [](double v, double fallback) { return v > 0.0 ? v : fallback; };
  const auto trials = [&](int fallback) { return cfg.trials > 0 ? cfg.trials : fallback; };

  ExperimentMetrics m;
  const auto& e = cfg.experiment;
  if (e == "sweep") {
    m = offset_sweep(setup, pick(cfg.photons, 5000.0), ConeOrientation{0.5 * kPi, 0.0, 1.0});
  } else if (e == "noisy") {
    m = noisy_single(setup, trials(200), pick(cfg.photons, 2000.0), ConeOrientation{0.5 * kPi, 0.0, 1.0});
  } else if (e == "orientation") {
    m = orientation_trials(setup, trials(50), pick(cfg.photons, 5000.0));
  } else if (e == "misalignment") {
    setup.misalignment = cfg.misalignment;
    if (setup.misalignment.dx_px == 0.0 && setup.misalignment.dy_px == 0.0) setup.misalignment = {1.0, 0.0};
    m = misalignment_trials(setup, trials(200), pick(cfg.photons, 2000.0));
  } else if (e == "overlap") {
    m = overlap_trials(setup, trials(100), pick(cfg.photons, 3000.0), 300.0);
  } else {
    const auto& geom = op.geometry();
    const double half_x = geom.r_max_x_nm() - 3.0 * geom.pixel_size_nm;
    const double half_y = geom.r_max_y_nm() - 3.0 * geom.pixel_size_nm;
    const double photons = pick(cfg.photons, 3000.0);
    m = run_trials(setup, trials(10), [&](int, std::mt19937_64& rng) {
      std::uniform_real_distribution<double> ux(-half_x, half_x);
      std::uniform_real_distribution<double> uy(-half_y, half_y);
      std::uniform_real_distribution<double> az(-kPi, kPi);
      std::vector<Emitter> es;
      for (int attempt = 0; es.size() < 3 && attempt < 10000; ++attempt) {
        const Position p{ux(rng), uy(rng)};
        const bool clear = std::all_of(es.begin(), es.end(), [&](const Emitter& o) {
          return std::hypot(o.r.x_nm - p.x_nm, o.r.y_nm - p.y_nm) >= 5.0 * geom.pixel_size_nm;
        });
        if (!clear) continue;
        Emitter em;
        em.s = photons;
        em.r = p;
        em.orientation = ConeOrientation{0.5 * kPi, az(rng), 1.0};
        es.push_back(em);
      }
      return es;
    });
  }
  MetricList out{{"experiment", e}};
  for (auto& kv : to_metric_list(m)) out.push_back(std::move(kv));
  log << "benchmark " << e << " finished in " << fmt(m.seconds) << " s\n";
  return out;
}

}  // namespace sbd
