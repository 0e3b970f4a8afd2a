#include "segmap/cli.hpp"

#include "segmap/evaluation.hpp"
#include "segmap/frontend.hpp"
#include "segmap/map_io.hpp"
#include "segmap/oracles.hpp"
#include "segmap/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>

namespace segmap {

namespace {

struct SimulateArgs {
  std::uint64_t world_seed = 1;
  std::uint64_t flight_seed = 2;
  std::uint64_t season_seed = 3;
  SurveyScenario scenario;
  double focal = 1000.0;
  int image_width = 2000;
  int image_height = 200;
  double spacing = 0.0;  // 0: take T_p from the config
  SeasonModel season;
  std::string config;
  std::string log;
  std::string truth;
};

struct MapArgs {
  std::string config;
  std::string log;
  std::string out;
};

struct AlignArgs {
  std::string config;
  std::string map_a;
  std::string map_b;
  std::string report;
  int workers = 1;
  int s_lim = 0;
  int wl = 0;
  int sl = 0;
};

struct EvalArgs {
  std::string config;
  std::string report;
  std::string map_a;
  std::string map_b;
  std::string truth_a;
  std::string truth_b;
  std::string out_dir = ".";
  int s_max = 40;
  int workers = 1;
};

struct BenchArgs {
  std::string config;
  std::string map_a;
  std::string map_b;
  std::vector<int> wls{25, 50, 100};
  std::vector<int> sls{10, 20};
  int repeats = 5;
  int workers = 1;
  std::string out = "bench.csv";
};

struct SelftestArgs {
  std::uint64_t seed = 7;
  int scale = 1;
};

PipelineConfig config_from(const std::string& path) {
  return path.empty() ? PipelineConfig{} : load_config(path);
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

int run_simulate(const SimulateArgs& a, std::ostream& out) {
  const PipelineConfig cfg = config_from(a.config);
  SurveyScenario s = a.scenario;
  s.camera = {a.focal, a.focal, 0.5 * a.image_width, 0.5 * a.image_height, a.image_width,
              a.image_height};
  SimWorld world = survey_world(s, a.world_seed);
  const bool seasonal = a.season.dropout_frac > 0.0 || a.season.size_scale_sigma > 0.0 ||
                        a.season.spawn_frac > 0.0;
  if (seasonal) world = perturb_season(world, a.season, a.season_seed);
  const double spacing = a.spacing > 0.0 ? a.spacing : cfg.T_p;
  SimulatedFlight f = survey_flight(s, world, spacing, a.flight_seed);
  f.log.meta["world_seed"] = std::to_string(a.world_seed);
  f.log.meta["flight_seed"] = std::to_string(a.flight_seed);
  save_flight_log(f.log, a.log);
  save_ground_truth(f.truth, a.truth);
  std::size_t n_obs = 0;
  for (const Keyframe& k : f.log.keyframes) n_obs += k.observations.size();
  out << "keyframes " << f.log.keyframes.size() << " observations " << n_obs << " objects "
      << world.objects.size() << '\n';
  return kExitOk;
}

int run_map(const MapArgs& a, std::ostream& out) {
  const PipelineConfig cfg = config_from(a.config);
  const FlightLog log = load_flight_log(a.log);
  const MappingResult r = map_from_log(log, cfg);
  save_map(r.map, a.out);
  out << "objects " << r.map.size() << " diverged " << r.diverged << " tracks "
      << r.completed_tracks << " dropped " << r.dropped_tracks << '\n';
  return kExitOk;
}

AlignmentParams alignment_params(const PipelineConfig& cfg, int wl, int sl, int s_lim) {
  AlignmentParams p = cfg.alignment;
  if (wl > 0) p.WL = wl;
  if (sl > 0) p.SL = sl;
  if (s_lim > 0) p.s_lim = s_lim;
  if (!p.is_valid()) throw std::invalid_argument("alignment parameters out of range");
  return p;
}

int run_align(const AlignArgs& a, std::ostream& out) {
  const PipelineConfig cfg = config_from(a.config);
  const AlignmentParams p = alignment_params(cfg, a.wl, a.sl, a.s_lim);
  const VehicleMap mi = load_map(a.map_a);
  const VehicleMap mj = load_map(a.map_b);
  const auto hyps = align_maps(mi, mj, p, a.workers);
  auto f = open_out(a.report);
  write_hypotheses_csv(f, hyps);
  const auto accepted = std::count_if(hyps.begin(), hyps.end(),
                                      [](const AlignmentHypothesis& h) { return h.accepted; });
  out << "window pairs " << hyps.size() << " accepted " << accepted << '\n';
  return kExitOk;
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  const PipelineConfig cfg = config_from(a.config);
  std::ifstream rep(a.report);
  if (!rep) throw std::runtime_error("cannot open " + a.report);
  const auto hyps = read_hypotheses_csv(rep, cfg.alignment.alpha_lim);
  const VehicleMap mi = load_map(a.map_a);
  const VehicleMap mj = load_map(a.map_b);
  const GroundTruth ti = load_ground_truth(a.truth_a);
  const GroundTruth tj = load_ground_truth(a.truth_b);
  const auto labels = label_pairs(ti, tj, mi, mj, cfg.alignment.WL, cfg.alignment.SL, ti.ground_z,
                                  {}, a.workers);
  std::vector<int> thresholds(static_cast<std::size_t>(std::max(0, a.s_max) + 1));
  std::iota(thresholds.begin(), thresholds.end(), 0);
  const PRCurve curve = precision_recall(hyps, labels, thresholds);
  const std::filesystem::path dir(a.out_dir);
  std::filesystem::create_directories(dir);
  {
    auto f = open_out(dir / "labels.csv");
    write_labels_csv(f, labels);
  }
  {
    auto f = open_out(dir / "pr_curve.csv");
    write_pr_csv(f, curve);
  }
  out << "average F1 " << curve.average_f1 << " recall at precision 0.95 "
      << curve.recall_at_precision(0.95) << '\n';
  return kExitOk;
}

int run_bench(const BenchArgs& a, std::ostream& out) {
  const PipelineConfig cfg = config_from(a.config);
  const VehicleMap mi = load_map(a.map_a);
  const VehicleMap mj = load_map(a.map_b);
  const auto rows = bench_search(mi, mj, cfg.alignment, a.wls, a.sls, a.repeats, a.workers);
  auto f = open_out(a.out);
  write_bench_csv(f, rows);
  write_bench_csv(out, rows);
  return kExitOk;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Object-map building and map-to-map alignment"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "simulate one traverse over a survey strip");
  c_sim->add_option("--config", sim.config, "parameter file (keyframe spacing defaults to T_p)");
  c_sim->add_option("--world-seed", sim.world_seed);
  c_sim->add_option("--flight-seed", sim.flight_seed);
  c_sim->add_option("--season-seed", sim.season_seed);
  c_sim->add_option("--objects", sim.scenario.objects);
  c_sim->add_option("--length", sim.scenario.length, "strip length, m");
  c_sim->add_option("--width", sim.scenario.width, "strip width, m");
  c_sim->add_option("--relief", sim.scenario.relief, "max object height, m");
  c_sim->add_option("--extent-min", sim.scenario.extent_min);
  c_sim->add_option("--extent-max", sim.scenario.extent_max);
  c_sim->add_option("--altitude", sim.scenario.altitude);
  c_sim->add_option("--lateral-offset", sim.scenario.lateral_offset);
  c_sim->add_option("--spacing", sim.spacing, "keyframe spacing, m");
  c_sim->add_option("--focal", sim.focal, "focal length, px");
  c_sim->add_option("--image-width", sim.image_width);
  c_sim->add_option("--image-height", sim.image_height);
  c_sim->add_option("--centroid-sigma", sim.scenario.noise.centroid_sigma);
  c_sim->add_option("--detection-prob", sim.scenario.noise.detection_prob)->check(CLI::Range(0.0, 1.0));
  c_sim->add_option("--size-jitter", sim.scenario.noise.size_jitter);
  c_sim->add_option("--drift", sim.scenario.noise.odom_drift_sigma, "m per m traveled");
  c_sim->add_option("--rot-drift", sim.scenario.noise.odom_rot_drift_sigma, "deg per m traveled");
  c_sim->add_option("--descriptor-dim", sim.scenario.noise.descriptor_dim);
  c_sim->add_option("--dropout", sim.season.dropout_frac)->check(CLI::Range(0.0, 1.0));
  c_sim->add_option("--size-scale-sigma", sim.season.size_scale_sigma);
  c_sim->add_option("--spawn", sim.season.spawn_frac)->check(CLI::Range(0.0, 1.0));
  c_sim->add_option("--log", sim.log, "observation log to write")->required();
  c_sim->add_option("--truth", sim.truth, "ground-truth sidecar to write")->required();

  MapArgs map;
  auto* c_map = app.add_subcommand("map", "build a map file from an observation log");
  c_map->add_option("--config", map.config);
  c_map->add_option("--log", map.log)->required();
  c_map->add_option("--out", map.out)->required();

  AlignArgs al;
  auto* c_al = app.add_subcommand("align", "align two map files, one report row per window pair");
  c_al->add_option("map_a", al.map_a)->required();
  c_al->add_option("map_b", al.map_b)->required();
  c_al->add_option("--config", al.config);
  c_al->add_option("--s-lim", al.s_lim, "acceptance threshold override");
  c_al->add_option("--wl", al.wl, "window length override");
  c_al->add_option("--sl", al.sl, "stride override");
  c_al->add_option("--workers", al.workers)->check(CLI::PositiveNumber);
  c_al->add_option("--report", al.report)->required();

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "label window pairs and write PR curve CSVs");
  c_ev->add_option("--config", ev.config);
  c_ev->add_option("--report", ev.report)->required();
  c_ev->add_option("--map-a", ev.map_a)->required();
  c_ev->add_option("--map-b", ev.map_b)->required();
  c_ev->add_option("--truth-a", ev.truth_a)->required();
  c_ev->add_option("--truth-b", ev.truth_b)->required();
  c_ev->add_option("--out-dir", ev.out_dir);
  c_ev->add_option("--s-max", ev.s_max, "sweep thresholds 0..s_max");
  c_ev->add_option("--workers", ev.workers)->check(CLI::PositiveNumber);

  BenchArgs be;
  auto* c_be = app.add_subcommand("bench", "time alignment over a WL x SL grid");
  c_be->add_option("--config", be.config);
  c_be->add_option("--map-a", be.map_a)->required();
  c_be->add_option("--map-b", be.map_b)->required();
  c_be->add_option("--wl", be.wls)->delimiter(',');
  c_be->add_option("--sl", be.sls)->delimiter(',');
  c_be->add_option("--repeats", be.repeats)->check(CLI::PositiveNumber);
  c_be->add_option("--workers", be.workers)->check(CLI::PositiveNumber);
  c_be->add_option("--out", be.out);

  SelftestArgs st;
  auto* c_st = app.add_subcommand("selftest", "check solvers against brute-force oracles");
  c_st->add_option("--seed", st.seed);
  c_st->add_option("--scale", st.scale, "multiplies the case counts")->check(CLI::PositiveNumber);

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("segmap");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);  // --help
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (c_sim->parsed()) return run_simulate(sim, out);
    if (c_map->parsed()) return run_map(map, out);
    if (c_al->parsed()) return run_align(al, out);
    if (c_ev->parsed()) return run_eval(ev, out);
    if (c_be->parsed()) return run_bench(be, out);
    if (c_st->parsed()) {
      const SelftestSummary s = run_selftest(st.seed, out, st.scale);
      out << (s.ok() ? "selftest passed" : "selftest FAILED") << '\n';
      return s.ok() ? kExitOk : kExitData;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace segmap
