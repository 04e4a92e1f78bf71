#include "lumennav/run_config.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "lumennav/baselines.hpp"
#include "lumennav/rl/nav_env.hpp"

namespace lumennav {

namespace {

Json training_json(const TrainingSetup& t) {
  return Json{{"profile", to_string(t.profile)},
              {"pool_size", t.pool_size},
              {"pool_seed", t.pool_seed}};
}

Json evaluation_json(const EvaluationSetup& e) {
  return Json{{"profile", to_string(e.profile)},
              {"episodes", e.episodes},
              {"env_seed", e.env_seed},
              {"horizon", e.horizon},
              {"path_mode", to_string(e.path_mode)}};
}

void require_object(const Json& j, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + " must be a JSON object");
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  camera.validate();
  degradation.validate();
  episode.validate();
  ppo.validate();
  if (training.pool_size < 1) throw std::invalid_argument("training.pool_size must be >= 1");
  if (evaluation.episodes < 1) throw std::invalid_argument("evaluation.episodes must be >= 1");
  if (evaluation.horizon < 1) throw std::invalid_argument("evaluation.horizon must be >= 1");
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::hash() const {
  Json j = *this;
  // worker count changes wall time only
  j["ppo"].erase("workers");
  return fnv1a_hex(j.dump());
}

void to_json(Json& j, const RunConfig& c) {
  j = Json{{"camera", c.camera},
           {"degradation", c.degradation},
           {"episode", c.episode},
           {"ppo", c.ppo},
           {"training", training_json(c.training)},
           {"evaluation", evaluation_json(c.evaluation)}};
}

void merge_json(const Json& j, RunConfig& c) {
  require_object(j, "config");
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    const Json& v = item.value();
    if (key == "camera") from_json(v, c.camera);
    else if (key == "degradation") from_json(v, c.degradation);
    else if (key == "episode") from_json(v, c.episode);
    else if (key == "ppo") rl::from_json(v, c.ppo);
    else if (key == "training") {
      require_object(v, "training");
      for (const auto& t : v.items()) {
        if (t.key() == "profile") c.training.profile = profile_from_string(t.value().get<std::string>());
        else if (t.key() == "pool_size") c.training.pool_size = t.value().get<int>();
        else if (t.key() == "pool_seed") c.training.pool_seed = t.value().get<std::uint64_t>();
        else throw std::invalid_argument("unknown key '" + t.key() + "' in training");
      }
    } else if (key == "evaluation") {
      require_object(v, "evaluation");
      for (const auto& t : v.items()) {
        if (t.key() == "profile") c.evaluation.profile = profile_from_string(t.value().get<std::string>());
        else if (t.key() == "episodes") c.evaluation.episodes = t.value().get<int>();
        else if (t.key() == "env_seed") c.evaluation.env_seed = t.value().get<std::uint64_t>();
        else if (t.key() == "horizon") c.evaluation.horizon = t.value().get<int>();
        else if (t.key() == "path_mode") c.evaluation.path_mode = path_mode_from_string(t.value().get<std::string>());
        else throw std::invalid_argument("unknown key '" + t.key() + "' in evaluation");
      }
    } else if (key == "config_hash" || key == "seed") {
      // provenance fields of a previously written config
    } else {
      throw std::invalid_argument("unknown config section '" + key + "'");
    }
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig c;
  try {
    merge_json(load_json(path), c);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("invalid config " + path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

void apply_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override '" + assignment + "' is not of the form key.path=value");
  }
  std::string pointer = "/" + assignment.substr(0, eq);
  for (char& ch : pointer) {
    if (ch == '.') ch = '/';
  }
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  Json tree = c;
  const Json::json_pointer ptr(pointer);
  if (!tree.contains(ptr)) {
    throw std::invalid_argument("unknown config key '" + assignment.substr(0, eq) + "'");
  }
  tree[ptr] = value;
  RunConfig next;
  try {
    merge_json(tree, next);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("bad value in override '" + assignment + "': " + e.what());
  }
  c = next;
}

TubePool generate_pool(ProfileTag profile, int count, std::uint64_t first_seed) {
  TubePool pool;
  for (int i = 0; i < count; ++i) {
    pool.push_back(std::make_shared<const TubeEnvironment>(
        generate_environment(profile, first_seed + static_cast<std::uint64_t>(i))));
  }
  return pool;
}

rl::TrainResult train_navigation(const RunConfig& config, const TubePool& pool,
                                 std::uint64_t seed, const rl::UpdateCallback& on_update) {
  config.validate();
  const rl::EnvFactory factory = [&](int) {
    return std::make_unique<rl::NavigationRlEnv>(pool, config.episode, config.camera,
                                                 config.degradation);
  };
  return rl::train(factory, config.ppo, seed, on_update);
}

std::string curve_csv(const std::vector<rl::CurvePoint>& curve, const std::string& config_hash,
                      std::uint64_t seed) {
  std::ostringstream out;
  out << "# config_hash=" << config_hash << " seed=" << seed << "\n";
  out << "update,steps,mean_reward,success_rate,collision_rate,episodes,mean_episode_return\n";
  for (const rl::CurvePoint& p : curve) {
    out << p.update << ',' << p.steps << ',' << fmt(p.mean_reward) << ','
        << fmt(p.success_rate) << ',' << fmt(p.collision_rate) << ',' << p.episodes << ','
        << fmt(p.mean_episode_return) << '\n';
  }
  return out.str();
}

PolicyEvaluation evaluate_controller(const RunConfig& config, const TubePool& tubes,
                                     const std::function<Controller()>& make_controller,
                                     std::uint64_t seed, const EpisodeConfig* override) {
  EpisodeConfig episode = override ? *override : config.episode;
  episode.horizon = config.evaluation.horizon;
  const std::string hash = config.hash();
  PolicyEvaluation out;
  for (std::size_t i = 0; i < tubes.size(); ++i) {
    NavigationEnv env(tubes[i], episode, config.camera, config.degradation);
    TrajectoryLog log = run_episode(env, make_controller(), mix_seed(seed, i));
    log.config_hash = hash;
    out.reports.push_back(evaluate(log, *tubes[i], config.evaluation.path_mode));
    out.logs.push_back(std::move(log));
  }
  out.aggregate = aggregate(out.reports);
  return out;
}

std::vector<RewardTerms> ablation_stack() {
  std::vector<RewardTerms> rows;
  RewardTerms t{false, false, false, false, false};
  t.distance = true;
  rows.push_back(t);
  t.direction = true;
  rows.push_back(t);
  t.success = true;
  rows.push_back(t);
  t.stability = true;
  rows.push_back(t);
  t.step = true;
  rows.push_back(t);
  return rows;
}

std::vector<AblationRow> run_ablation(const RunConfig& config, const TubePool& train_pool,
                                      const TubePool& eval_tubes, std::uint64_t seed,
                                      const std::function<void(const std::string&)>& progress) {
  static const char* labels[] = {"r_dis", "+ r_dir", "+ r_succ", "+ r_penalty", "+ r_step"};
  std::vector<AblationRow> rows;
  const auto stack = ablation_stack();
  for (std::size_t i = 0; i < stack.size(); ++i) {
    RunConfig variant = config;
    variant.episode.rewards = stack[i];
    if (progress) progress(std::string("training ") + labels[i]);
    rl::TrainResult trained = train_navigation(variant, train_pool, seed);
    auto policy = std::make_shared<const rl::GaussianPolicy>(trained.model.policy);
    PolicyEvaluation ev = evaluate_controller(
        variant, eval_tubes, [&] { return make_policy_controller(policy); }, seed);
    AblationRow row;
    row.label = labels[i];
    row.terms = stack[i];
    row.report = ev.aggregate;
    row.final_mean_reward = trained.curve.empty() ? 0.0 : trained.curve.back().mean_reward;
    rows.push_back(row);
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows, const std::string& config_hash,
                         std::uint64_t seed) {
  std::ostringstream out;
  out << "# config_hash=" << config_hash << " seed=" << seed << "\n";
  out << "variant,terms,d_geo_mean,d_geo_std,s_nav_mean,s_nav_std,jerk_mean,jerk_std,"
         "collisions_mean,completion_mean,final_mean_reward\n";
  for (const AblationRow& r : rows) {
    const AggregateReport& a = r.report;
    out << r.label << ',' << r.terms.label() << ',' << fmt(a.d_geo.mean) << ','
        << fmt(a.d_geo.std) << ',' << fmt(a.s_nav.mean) << ',' << fmt(a.s_nav.std) << ','
        << fmt(a.jerk_index.mean) << ',' << fmt(a.jerk_index.std) << ','
        << fmt(a.n_collisions.mean) << ',' << fmt(a.completion.mean) << ','
        << fmt(r.final_mean_reward) << '\n';
  }
  return out.str();
}

Json metrics_json(const MetricsReport& m) {
  return Json{{"d_geo", m.d_geo},
              {"s_nav", m.s_nav},
              {"jerk_index", m.jerk_index},
              {"n_collisions", m.n_collisions},
              {"n_steps", m.n_steps},
              {"near_wall_steps", m.near_wall_steps},
              {"path_length", m.path_length},
              {"centerline_length", m.centerline_length},
              {"completion", m.completion}};
}

Json aggregate_json(const AggregateReport& a) {
  auto ms = [](const MeanStd& x) { return Json{{"mean", x.mean}, {"std", x.std}}; };
  return Json{{"episodes", a.episodes},
              {"d_geo", ms(a.d_geo)},
              {"s_nav", ms(a.s_nav)},
              {"jerk_index", ms(a.jerk_index)},
              {"n_collisions", ms(a.n_collisions)},
              {"completion", ms(a.completion)},
              {"path_length", ms(a.path_length)},
              {"near_wall_steps", ms(a.near_wall_steps)},
              {"collision_free_complete", a.collision_free_complete}};
}

}  // namespace lumennav
