// lumennav command-line driver.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lumennav/baselines.hpp"
#include "lumennav/metrics.hpp"
#include "lumennav/perception.hpp"
#include "lumennav/render.hpp"
#include "lumennav/rl/ppo.hpp"
#include "lumennav/run_config.hpp"
#include "lumennav/serialization.hpp"

namespace fs = std::filesystem;
using namespace lumennav;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;
constexpr const char* kOutDirVariable = "LUMENNAV_OUT_DIR";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Relative output paths land under $LUMENNAV_OUT_DIR when it is set.
fs::path output_path(const std::string& given, const std::string& fallback) {
  fs::path p = given.empty() ? fs::path(fallback) : fs::path(given);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kOutDirVariable); dir && *dir) p = fs::path(dir) / p;
  }
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

fs::path output_dir(const std::string& given, const std::string& fallback) {
  fs::path p = given.empty() ? fs::path(fallback) : fs::path(given);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kOutDirVariable); dir && *dir) p = fs::path(dir) / p;
  }
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

struct ConfigOptions {
  std::string config_file;
  std::string degradation_file;
  std::vector<std::string> overrides;
  int workers = 1;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "run configuration JSON");
    app->add_option("--degradation", degradation_file, "degradation profile JSON (from calibrate)");
    app->add_option("--set", overrides, "override a config value, e.g. ppo.total_steps=50000");
    app->add_option("--workers", workers, "rollout worker threads")->check(CLI::PositiveNumber);
  }

  RunConfig load() const {
    RunConfig c;
    if (!config_file.empty()) c = load_run_config(config_file);
    if (!degradation_file.empty()) {
      DegradationProfile p;
      from_json(load_json(degradation_file), p);
      c.degradation = p;
    }
    for (const auto& o : overrides) apply_override(c, o);
    if (workers > 1) c.ppo.workers = workers;
    c.validate();
    return c;
  }
};

std::shared_ptr<const TubeEnvironment> load_tube(const std::string& path) {
  return std::make_shared<const TubeEnvironment>(load_environment(path));
}

Json with_provenance(Json doc, const std::string& hash, std::uint64_t seed) {
  doc["config_hash"] = hash;
  doc["seed"] = seed;
  return doc;
}

void print_aggregate(const std::string& label, const AggregateReport& a) {
  std::cout << label << ": episodes " << a.episodes << "  d_geo " << a.d_geo.mean << " +- "
            << a.d_geo.std << "  s_nav " << a.s_nav.mean << " +- " << a.s_nav.std << "  J "
            << a.jerk_index.mean << " +- " << a.jerk_index.std << "  collisions "
            << a.n_collisions.mean << "  completion " << a.completion.mean << "\n";
}

TrajectoryLog concatenate(const std::vector<TrajectoryLog>& logs) {
  TrajectoryLog all;
  if (logs.empty()) return all;
  all.step_period = logs.front().step_period;
  all.seed = logs.front().seed;
  all.config_hash = logs.front().config_hash;
  for (const auto& l : logs) all.steps.insert(all.steps.end(), l.steps.begin(), l.steps.end());
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lumennav: follow-the-leader lumen navigation simulator and PPO harness"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  // gen-env
  auto* gen = app.add_subcommand("gen-env", "generate a procedural lumen environment");
  std::string gen_profile = "simple", gen_out;
  std::uint64_t gen_seed = 0;
  double gen_amplitude = 0.05, gen_far = 300.0;
  gen->add_option("--profile", gen_profile, "simple | complex")->check(CLI::IsMember({"simple", "complex"}));
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output JSON path");
  gen->add_option("--texture-amplitude", gen_amplitude, "radius texture amplitude (fraction)");
  gen->add_option("--far-clip", gen_far, "camera far clip, mm");

  // dataset
  auto* ds = app.add_subcommand("dataset", "export RGB/depth pairs from random interior poses");
  std::string ds_env, ds_out;
  int ds_count = 10;
  std::uint64_t ds_seed = 0;
  DatasetOptions ds_opts;
  ds->add_option("--env", ds_env, "environment JSON")->required();
  ds->add_option("--count", ds_count, "number of samples")->check(CLI::PositiveNumber);
  ds->add_option("--seed", ds_seed, "sampling seed");
  ds->add_option("--out", ds_out, "output directory");
  ds->add_option("--width", ds_opts.width);
  ds->add_option("--height", ds_opts.height);
  ds->add_option("--fov-min", ds_opts.fov_min_deg);
  ds->add_option("--fov-max", ds_opts.fov_max_deg);
  ds->add_option("--light-min", ds_opts.light_min);
  ds->add_option("--light-max", ds_opts.light_max);

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "fit a depth degradation profile to target statistics");
  std::string cal_env, cal_out;
  double cal_abs = 0.245, cal_delta = 0.677;
  std::uint64_t cal_seed = 0;
  int cal_frames = 200;
  ConfigOptions cal_cfg;
  cal->add_option("--env", cal_env, "environment JSON")->required();
  cal->add_option("--abs-rel", cal_abs, "target Abs.Rel");
  cal->add_option("--delta1", cal_delta, "target delta1");
  cal->add_option("--seed", cal_seed, "pose sampling seed");
  cal->add_option("--frames", cal_frames, "frames per evaluation")->check(CLI::PositiveNumber);
  cal->add_option("--out", cal_out, "output profile JSON");
  cal_cfg.attach(cal);

  // train
  auto* tr = app.add_subcommand("train", "train a PPO navigation policy");
  std::string tr_env, tr_out;
  std::uint64_t tr_seed = 0;
  ConfigOptions tr_cfg;
  tr->add_option("--env", tr_env,
                 "environment JSON, or simple|complex for the configured generated pool");
  tr->add_option("--seed", tr_seed, "training seed");
  tr->add_option("--out", tr_out, "output directory");
  tr_cfg.attach(tr);

  // eval
  auto* ev = app.add_subcommand("eval", "run a trained policy and log trajectories");
  std::string ev_env, ev_policy, ev_log, ev_report;
  int ev_episodes = 1;
  std::uint64_t ev_seed = 0;
  ConfigOptions ev_cfg;
  ev->add_option("--env", ev_env, "environment JSON")->required();
  ev->add_option("--policy", ev_policy, "checkpoint JSON")->required();
  ev->add_option("--episodes", ev_episodes)->check(CLI::PositiveNumber);
  ev->add_option("--seed", ev_seed);
  ev->add_option("--log-out", ev_log, "trajectory JSONL");
  ev->add_option("--report", ev_report, "metrics JSON");
  ev_cfg.attach(ev);

  // baseline
  auto* bl = app.add_subcommand("baseline", "run a scripted controller");
  std::string bl_env, bl_kind = "oracle", bl_log, bl_report;
  int bl_episodes = 1;
  std::uint64_t bl_seed = 0;
  ConfigOptions bl_cfg;
  bl->add_option("--env", bl_env, "environment JSON")->required();
  bl->add_option("--kind", bl_kind, "oracle | lumen-follower | target-follower")
      ->check(CLI::IsMember({"oracle", "lumen-follower", "target-follower"}));
  bl->add_option("--episodes", bl_episodes)->check(CLI::PositiveNumber);
  bl->add_option("--seed", bl_seed);
  bl->add_option("--log-out", bl_log, "trajectory JSONL");
  bl->add_option("--report", bl_report, "metrics JSON");
  bl_cfg.attach(bl);

  // metrics
  auto* mt = app.add_subcommand("metrics", "compute D_geo, S_nav and jerk for a trajectory log");
  std::string mt_log, mt_env, mt_mode = "excess", mt_out, mt_csv, mt_label = "run";
  mt->add_option("--log", mt_log, "trajectory JSONL")->required();
  mt->add_option("--env", mt_env, "environment JSON")->required();
  mt->add_option("--mode", mt_mode, "excess | literal")->check(CLI::IsMember({"excess", "literal"}));
  mt->add_option("--out", mt_out, "metrics report JSON");
  mt->add_option("--csv", mt_csv, "summary CSV");
  mt->add_option("--label", mt_label, "method name for the CSV row");

  // plot
  auto* pl = app.add_subcommand("plot", "SVG of trajectory projections");
  std::string pl_env, pl_out;
  std::vector<std::string> pl_logs;
  pl->add_option("--env", pl_env, "environment JSON")->required();
  pl->add_option("--log", pl_logs, "trajectory JSONL (repeatable)")->required();
  pl->add_option("--out", pl_out, "output SVG");

  // ablate
  auto* ab = app.add_subcommand("ablate", "train and compare cumulative reward subsets");
  std::string ab_out;
  std::uint64_t ab_seed = 0;
  long ab_steps = 100000;
  ConfigOptions ab_cfg;
  ab->add_option("--seed", ab_seed);
  ab->add_option("--steps", ab_steps, "training steps per variant")->check(CLI::PositiveNumber);
  ab->add_option("--out", ab_out, "output directory");
  ab_cfg.attach(ab);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) {
      TubeEnvironment env = generate_environment(profile_from_string(gen_profile), gen_seed)
                                .with_texture_amplitude(gen_amplitude)
                                .with_far_clip(gen_far);
      Json doc = environment_to_json(env);
      const std::string hash = fnv1a_hex(doc.dump());
      const fs::path out = output_path(gen_out, "env.json");
      save_json(out, with_provenance(doc, hash, gen_seed));
      std::cout << "wrote " << out.string() << " (" << gen_profile << ", length "
                << env.centerline().length() << " mm, hash " << hash << ")\n";
    } else if (*ds) {
      const TubeEnvironment env = load_environment(ds_env);
      ds_opts.far_clip = env.far_clip();
      ds_opts.config_hash = fnv1a_hex(environment_to_json(env).dump() + std::to_string(ds_opts.width) +
                                      std::to_string(ds_opts.height));
      const fs::path out = output_dir(ds_out, "dataset");
      const DatasetManifest m = export_dataset(env, ds_count, ds_seed, out, ds_opts);
      std::cout << "wrote " << m.samples.size() << " samples to " << out.string() << "\n";
    } else if (*cal) {
      const RunConfig cfg = cal_cfg.load();
      const TubeEnvironment env = load_environment(cal_env);
      CalibrationOptions opts;
      opts.frames = cal_frames;
      opts.noise_scale = cfg.degradation.noise_scale;
      if (cfg.degradation.blur_radius > 0.0) opts.blur_radius = cfg.degradation.blur_radius;
      const CalibrationResult r = calibrate_profile(env, cfg.camera, cal_abs, cal_delta, cal_seed, opts);
      Json doc = r.profile;
      doc["achieved"] = r.achieved;
      doc["converged"] = r.converged;
      doc["targets"] = Json{{"abs_rel", cal_abs}, {"delta1", cal_delta}};
      const fs::path out = output_path(cal_out, "degradation.json");
      save_json(out, with_provenance(doc, cfg.hash(), cal_seed));
      std::cout << "abs_rel " << r.achieved.abs_rel << "  delta1 " << r.achieved.delta1
                << "  after " << r.evaluations << " evaluations -> " << out.string() << "\n";
      if (!r.converged) {
        std::cerr << "error: calibration did not reach the targets within budget; best profile written\n";
        return kExitRuntime;
      }
    } else if (*tr) {
      RunConfig cfg = tr_cfg.load();
      TubePool pool;
      if (tr_env.empty() || tr_env == "simple" || tr_env == "complex") {
        const ProfileTag tag = tr_env.empty() ? cfg.training.profile : profile_from_string(tr_env);
        pool = generate_pool(tag, cfg.training.pool_size, cfg.training.pool_seed);
      } else {
        pool.push_back(load_tube(tr_env));
      }
      const std::string hash = cfg.hash();
      const fs::path out = output_dir(tr_out, "train");
      rl::TrainResult result = train_navigation(
          cfg, pool, tr_seed, [](const rl::CurvePoint& p, const rl::UpdateReport& r) {
            std::cerr << "update " << p.update << "  steps " << p.steps << "  reward "
                      << p.mean_reward << "  success " << p.success_rate << "  collision "
                      << p.collision_rate << "  entropy " << r.entropy << "\n";
          });
      rl::save_checkpoint((out / "checkpoint.json").string(), result.model, cfg.ppo, hash,
                          result.rng_state, result.steps);
      write_text(out / "curve.csv", curve_csv(result.curve, hash, tr_seed));
      save_json(out / "config.json", with_provenance(Json(cfg), hash, tr_seed));
      std::cout << "trained " << result.steps << " steps -> " << out.string() << "\n";
    } else if (*ev || *bl) {
      const bool is_eval = static_cast<bool>(*ev);
      const ConfigOptions& co = is_eval ? ev_cfg : bl_cfg;
      RunConfig cfg = co.load();
      auto tube = load_tube(is_eval ? ev_env : bl_env);
      const int episodes = is_eval ? ev_episodes : bl_episodes;
      const std::uint64_t seed = is_eval ? ev_seed : bl_seed;
      TubePool tubes(static_cast<std::size_t>(episodes), tube);
      PolicyEvaluation result;
      if (is_eval) {
        const rl::Checkpoint ck = rl::load_checkpoint(ev_policy);
        auto policy = std::make_shared<const rl::GaussianPolicy>(ck.model.policy);
        result = evaluate_controller(cfg, tubes, [&] { return make_policy_controller(policy); }, seed);
      } else if (bl_kind == "oracle") {
        EpisodeConfig ep = cfg.episode;
        ep.gating = false;
        ep.perturb_start = false;
        ep.forward_mode = ForwardMode::constant;
        result = evaluate_controller(cfg, tubes, [] { return make_oracle_controller(); }, seed, &ep);
      } else {
        EpisodeConfig ep = cfg.episode;
        if (bl_kind == "lumen-follower") {
          ep.extraction.level = ep.extraction.n_levels;
          ep.extraction.order = LevelOrder::near_first;
        }
        result = evaluate_controller(cfg, tubes, [] { return make_target_follower(); }, seed, &ep);
      }
      const std::string& log_out = is_eval ? ev_log : bl_log;
      const fs::path log_path = output_path(log_out, is_eval ? "eval.jsonl" : "baseline.jsonl");
      TrajectoryLog all = concatenate(result.logs);
      all.seed = seed;
      write_trajectory_jsonl(log_path, all);
      Json report = Json{{"aggregate", aggregate_json(result.aggregate)}};
      report["episodes"] = Json::array();
      for (const auto& m : result.reports) report["episodes"].push_back(metrics_json(m));
      const std::string& report_out = is_eval ? ev_report : bl_report;
      if (!report_out.empty()) {
        save_json(output_path(report_out, "report.json"), with_provenance(report, cfg.hash(), seed));
      }
      print_aggregate(is_eval ? "policy" : bl_kind, result.aggregate);
      std::cout << "log -> " << log_path.string() << "\n";
    } else if (*mt) {
      const TubeEnvironment env = load_environment(mt_env);
      const TrajectoryLog log = read_trajectory_jsonl(mt_log);
      if (log.steps.empty()) throw std::runtime_error("trajectory log is empty: " + mt_log);
      const PathMode mode = path_mode_from_string(mt_mode);
      std::vector<MetricsReport> reports;
      Json doc;
      doc["mode"] = mt_mode;
      doc["episodes"] = Json::array();
      for (const TrajectoryLog& episode : split_episodes(log)) {
        reports.push_back(evaluate(episode, env, mode));
        doc["episodes"].push_back(metrics_json(reports.back()));
      }
      const AggregateReport agg = aggregate(reports);
      doc["aggregate"] = aggregate_json(agg);
      doc = with_provenance(doc, log.config_hash, log.seed);
      if (!mt_out.empty()) save_json(output_path(mt_out, "metrics.json"), doc);
      if (!mt_csv.empty()) {
        const SummaryRow row{mt_label, agg};
        write_text(output_path(mt_csv, "summary.csv"), summary_csv(std::span(&row, 1)));
      }
      std::cout << doc.dump(2) << "\n";
    } else if (*pl) {
      const TubeEnvironment env = load_environment(pl_env);
      std::vector<TrajectoryLog> logs;
      std::vector<std::string> labels;
      for (const auto& path : pl_logs) {
        for (auto& episode : split_episodes(read_trajectory_jsonl(path))) {
          logs.push_back(std::move(episode));
          labels.push_back(fs::path(path).stem().string());
        }
      }
      const fs::path out = output_path(pl_out, "trajectories.svg");
      write_text(out, trajectory_svg(env, logs, labels));
      std::cout << "wrote " << out.string() << "\n";
    } else if (*ab) {
      RunConfig cfg = ab_cfg.load();
      cfg.ppo.total_steps = ab_steps;
      const std::string hash = cfg.hash();
      const TubePool train_pool =
          generate_pool(cfg.training.profile, cfg.training.pool_size, cfg.training.pool_seed);
      const TubePool eval_tubes =
          generate_pool(cfg.evaluation.profile, cfg.evaluation.episodes, cfg.evaluation.env_seed);
      const auto rows = run_ablation(cfg, train_pool, eval_tubes, ab_seed,
                                     [](const std::string& msg) { std::cerr << msg << "\n"; });
      const std::string table = ablation_csv(rows, hash, ab_seed);
      const fs::path out = output_dir(ab_out, "ablation");
      write_text(out / "ablation.csv", table);
      std::cout << table;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: invalid configuration: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed input: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
