#include "lumennav/serialization.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>

namespace lumennav {

namespace {

void check_keys(const Json& j, const char* what, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + " must be a JSON object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) {
      throw std::invalid_argument("unknown key '" + item.key() + "' in " + what);
    }
  }
}

template <typename T>
void read_opt(const Json& j, const char* key, T& field) {
  if (auto it = j.find(key); it != j.end()) field = it->template get<T>();
}

std::string seed_policy_name(SeedPolicy p) {
  return p == SeedPolicy::per_frame ? "per_frame" : "frozen";
}

SeedPolicy seed_policy_from(const std::string& s) {
  if (s == "per_frame") return SeedPolicy::per_frame;
  if (s == "frozen") return SeedPolicy::frozen;
  throw std::invalid_argument("unknown seed_policy '" + s + "'");
}

}  // namespace

Json load_json(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("file not found: " + path.string());
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void save_json(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void to_json(Json& j, const Pose& p) {
  j = Json{{"position", p.position}, {"quaternion", p.orientation}};
}

void from_json(const Json& j, Pose& p) {
  p.position = j.at("position").get<Vec3>();
  p.orientation = j.at("quaternion").get<Quat>().normalized();
}

void to_json(Json& j, const DatasetSample& s) {
  j = Json{{"index", s.index},
           {"rgb", s.rgb_file},
           {"depth", s.depth_file},
           {"pose", s.pose},
           {"light_intensity", s.light_intensity},
           {"fov_deg", s.fov_deg}};
}

void to_json(Json& j, const DatasetManifest& m) {
  j = Json{{"seed", m.seed}, {"config_hash", m.config_hash}, {"count", m.samples.size()}};
  j["samples"] = m.samples;
}

void to_json(Json& j, const CameraIntrinsics& c) {
  j = Json{{"width", c.width},
           {"height", c.height},
           {"vertical_fov_deg", c.vertical_fov_deg},
           {"far_clip", c.far_clip}};
}

void from_json(const Json& j, CameraIntrinsics& c) {
  check_keys(j, "camera", {"width", "height", "vertical_fov_deg", "far_clip"});
  read_opt(j, "width", c.width);
  read_opt(j, "height", c.height);
  read_opt(j, "vertical_fov_deg", c.vertical_fov_deg);
  read_opt(j, "far_clip", c.far_clip);
}

void to_json(Json& j, const DegradationProfile& p) {
  j = Json{{"sigma_mult", p.sigma_mult},
           {"blur_radius", p.blur_radius},
           {"dropout_rate", p.dropout_rate},
           {"outlier_scale", p.outlier_scale},
           {"noise_scale", p.noise_scale},
           {"seed_policy", seed_policy_name(p.seed_policy)}};
}

void from_json(const Json& j, DegradationProfile& p) {
  check_keys(j, "degradation",
             {"sigma_mult", "blur_radius", "dropout_rate", "outlier_scale", "noise_scale", "seed_policy",
              "achieved", "converged", "targets", "config_hash", "seed"});
  read_opt(j, "sigma_mult", p.sigma_mult);
  read_opt(j, "blur_radius", p.blur_radius);
  read_opt(j, "dropout_rate", p.dropout_rate);
  read_opt(j, "outlier_scale", p.outlier_scale);
  read_opt(j, "noise_scale", p.noise_scale);
  if (j.contains("seed_policy")) p.seed_policy = seed_policy_from(j["seed_policy"].get<std::string>());
}

void to_json(Json& j, const DepthStats& s) {
  j = Json{{"abs_rel", s.abs_rel}, {"delta1", s.delta1}, {"frames", s.frames}};
}

void to_json(Json& j, const ExtractionSettings& s) {
  j = Json{{"level", s.level},
           {"n_levels", s.n_levels},
           {"order", s.order == LevelOrder::near_first ? "near_first" : "far_first"},
           {"region", s.region == LevelRegion::band ? "band" : "beyond"},
           {"min_component_pixels", s.min_component_pixels}};
}

void from_json(const Json& j, ExtractionSettings& s) {
  check_keys(j, "extraction", {"level", "n_levels", "order", "region", "min_component_pixels"});
  read_opt(j, "level", s.level);
  read_opt(j, "n_levels", s.n_levels);
  read_opt(j, "min_component_pixels", s.min_component_pixels);
  if (j.contains("order")) {
    const auto o = j["order"].get<std::string>();
    if (o == "near_first") s.order = LevelOrder::near_first;
    else if (o == "far_first") s.order = LevelOrder::far_first;
    else throw std::invalid_argument("unknown level order '" + o + "'");
  }
  if (j.contains("region")) {
    const auto r = j["region"].get<std::string>();
    if (r == "band") s.region = LevelRegion::band;
    else if (r == "beyond") s.region = LevelRegion::beyond;
    else throw std::invalid_argument("unknown level region '" + r + "'");
  }
}

void to_json(Json& j, const RewardTerms& t) {
  j = Json{{"distance", t.distance},
           {"direction", t.direction},
           {"success", t.success},
           {"stability", t.stability},
           {"step", t.step}};
}

void from_json(const Json& j, RewardTerms& t) {
  check_keys(j, "rewards", {"distance", "direction", "success", "stability", "step"});
  read_opt(j, "distance", t.distance);
  read_opt(j, "direction", t.direction);
  read_opt(j, "success", t.success);
  read_opt(j, "stability", t.stability);
  read_opt(j, "step", t.step);
}

void to_json(Json& j, const EpisodeConfig& c) {
  j = Json{{"horizon", c.horizon},
           {"tau", c.tau},
           {"clearance_min", c.clearance_min},
           {"yaw_pitch_scale", c.yaw_pitch_scale},
           {"forward_speed", c.forward_speed},
           {"gate_ratio", c.gate_ratio},
           {"stability_window", c.stability_window},
           {"stability_count", c.stability_count},
           {"epsilon", c.epsilon},
           {"step_period", c.step_period},
           {"target_lost_frames", c.target_lost_frames},
           {"goal_fraction", c.goal_fraction},
           {"success_terminates", c.success_terminates},
           {"gating", c.gating},
           {"forward_mode", to_string(c.forward_mode)},
           {"segment_spacing", c.segment_spacing},
           {"n_segments", c.n_segments},
           {"start_s", c.start_s},
           {"start_offset_fraction", c.start_offset_fraction},
           {"start_tilt_deg", c.start_tilt_deg},
           {"perturb_start", c.perturb_start},
           {"extraction", c.extraction},
           {"encoding", c.encoding == EncodingMode::centered ? "centered" : "literal"},
           {"rewards", c.rewards}};
}

void from_json(const Json& j, EpisodeConfig& c) {
  check_keys(j, "episode",
             {"horizon", "tau", "clearance_min", "yaw_pitch_scale", "forward_speed",
              "gate_ratio", "stability_window", "stability_count", "epsilon", "step_period",
              "target_lost_frames", "goal_fraction", "success_terminates", "gating",
              "forward_mode", "segment_spacing", "n_segments", "start_s",
              "start_offset_fraction", "start_tilt_deg", "perturb_start", "extraction",
              "encoding", "rewards"});
  read_opt(j, "horizon", c.horizon);
  read_opt(j, "tau", c.tau);
  read_opt(j, "clearance_min", c.clearance_min);
  read_opt(j, "yaw_pitch_scale", c.yaw_pitch_scale);
  read_opt(j, "forward_speed", c.forward_speed);
  read_opt(j, "gate_ratio", c.gate_ratio);
  read_opt(j, "stability_window", c.stability_window);
  read_opt(j, "stability_count", c.stability_count);
  read_opt(j, "epsilon", c.epsilon);
  read_opt(j, "step_period", c.step_period);
  read_opt(j, "target_lost_frames", c.target_lost_frames);
  read_opt(j, "goal_fraction", c.goal_fraction);
  read_opt(j, "success_terminates", c.success_terminates);
  read_opt(j, "gating", c.gating);
  if (j.contains("forward_mode")) {
    c.forward_mode = forward_mode_from_string(j["forward_mode"].get<std::string>());
  }
  read_opt(j, "segment_spacing", c.segment_spacing);
  read_opt(j, "n_segments", c.n_segments);
  read_opt(j, "start_s", c.start_s);
  read_opt(j, "start_offset_fraction", c.start_offset_fraction);
  read_opt(j, "start_tilt_deg", c.start_tilt_deg);
  read_opt(j, "perturb_start", c.perturb_start);
  if (j.contains("extraction")) from_json(j["extraction"], c.extraction);
  if (j.contains("encoding")) {
    const auto e = j["encoding"].get<std::string>();
    if (e == "centered") c.encoding = EncodingMode::centered;
    else if (e == "literal") c.encoding = EncodingMode::literal;
    else throw std::invalid_argument("unknown encoding '" + e + "'");
  }
  if (j.contains("rewards")) from_json(j["rewards"], c.rewards);
}

void to_json(Json& j, const RewardBreakdown& r) {
  j = Json{{"r_dis", r.r_dis},     {"r_dir", r.r_dir},         {"r_succ", r.r_succ},
           {"r_step", r.r_step},   {"r_penalty", r.r_penalty}, {"total", r.total},
           {"u", r.u},             {"v", r.v},                 {"success", r.success}};
}

void from_json(const Json& j, RewardBreakdown& r) {
  r.r_dis = j.at("r_dis").get<double>();
  r.r_dir = j.at("r_dir").get<double>();
  r.r_succ = j.at("r_succ").get<double>();
  r.r_step = j.at("r_step").get<double>();
  r.r_penalty = j.at("r_penalty").get<double>();
  r.total = j.at("total").get<double>();
  r.u = j.at("u").get<double>();
  r.v = j.at("v").get<double>();
  r.success = j.at("success").get<bool>();
}

void to_json(Json& j, const StepRecord& r) {
  j = Json{{"t", r.t},
           {"step", r.step},
           {"tip_position", r.tip_position},
           {"quaternion", r.orientation},
           {"action", r.action},
           {"reward", r.reward},
           {"u", r.u},
           {"v", r.v},
           {"rho", r.rho},
           {"target_valid", r.target_valid},
           {"clearance", r.clearance},
           {"collision", r.collision},
           {"gated", r.gated},
           {"gate_rho", r.gate_rho},
           {"translation", r.translation},
           {"done_reason", to_string(r.done_reason)}};
}

void from_json(const Json& j, StepRecord& r) {
  r.t = j.at("t").get<double>();
  r.step = j.at("step").get<int>();
  r.tip_position = j.at("tip_position").get<Vec3>();
  r.orientation = j.at("quaternion").get<Quat>();
  r.action = j.at("action").get<Vec3>();
  r.reward = j.at("reward").get<RewardBreakdown>();
  r.u = j.at("u").get<double>();
  r.v = j.at("v").get<double>();
  r.rho = j.at("rho").get<double>();
  r.target_valid = j.value("target_valid", true);
  r.clearance = j.at("clearance").get<double>();
  r.collision = j.value("collision", false);
  r.gated = j.at("gated").get<bool>();
  r.gate_rho = j.value("gate_rho", 0.0);
  r.translation = j.value("translation", 0.0);
  r.done_reason = done_reason_from_string(j.at("done_reason").get<std::string>());
}

Json environment_to_json(const TubeEnvironment& env) {
  const auto& line = env.centerline();
  Json points = Json::array();
  for (const Vec3& p : line.control_points()) points.push_back(p);
  Json radii = Json::array();
  for (double r : line.radii()) radii.push_back(r);
  return Json{{"control_points", points},
              {"radii", radii},
              {"profile_tag", to_string(env.profile())},
              {"texture_seed", env.texture_seed()},
              {"far_clip", env.far_clip()},
              {"texture_amplitude", env.texture_amplitude()}};
}

TubeEnvironment environment_from_json(const Json& j) {
  check_keys(j, "environment",
             {"control_points", "radii", "profile_tag", "texture_seed", "far_clip",
              "texture_amplitude", "seed", "config_hash", "length"});
  std::vector<Vec3> points;
  for (const auto& p : j.at("control_points")) points.push_back(p.get<Vec3>());
  auto radii = j.at("radii").get<std::vector<double>>();
  return TubeEnvironment(build_centerline(std::move(points), std::move(radii)),
                         profile_from_string(j.at("profile_tag").get<std::string>()),
                         j.at("texture_seed").get<std::uint64_t>(),
                         j.value("far_clip", 300.0), j.value("texture_amplitude", 0.05));
}

void save_environment(const std::filesystem::path& path, const TubeEnvironment& env) {
  save_json(path, environment_to_json(env));
}

TubeEnvironment load_environment(const std::filesystem::path& path) {
  return environment_from_json(load_json(path));
}

std::string trajectory_jsonl(const TrajectoryLog& log) {
  std::string out;
  for (const StepRecord& r : log.steps) {
    Json j = r;
    j["seed"] = log.seed;
    j["config_hash"] = log.config_hash;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_trajectory_jsonl(const std::filesystem::path& path, const TrajectoryLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << trajectory_jsonl(log);
}

TrajectoryLog read_trajectory_jsonl(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("file not found: " + path.string());
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  TrajectoryLog log;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": invalid JSON record");
    }
    if (log.steps.empty()) {
      log.seed = j.value("seed", std::uint64_t{0});
      log.config_hash = j.value("config_hash", std::string{});
    }
    log.steps.push_back(j.get<StepRecord>());
  }
  if (!log.steps.empty() && log.steps.front().step > 0) {
    log.step_period = log.steps.front().t / log.steps.front().step;
  }
  return log;
}

std::vector<TrajectoryLog> split_episodes(const TrajectoryLog& log) {
  std::vector<TrajectoryLog> out;
  TrajectoryLog current;
  current.step_period = log.step_period;
  current.seed = log.seed;
  current.config_hash = log.config_hash;
  for (const StepRecord& r : log.steps) {
    current.steps.push_back(r);
    if (r.done_reason != DoneReason::none) {
      out.push_back(current);
      current.steps.clear();
    }
  }
  if (!current.steps.empty()) out.push_back(current);
  return out;
}

}  // namespace lumennav

namespace lumennav::rl {

void to_json(Json& j, const PpoConfig& c) {
  j = Json{{"gamma", c.gamma},
           {"gae_lambda", c.gae_lambda},
           {"learning_rate", c.learning_rate},
           {"minibatch_size", c.minibatch_size},
           {"clip_epsilon", c.clip_epsilon},
           {"epochs_per_update", c.epochs_per_update},
           {"steps_per_update", c.steps_per_update},
           {"total_steps", c.total_steps},
           {"entropy_coef", c.entropy_coef},
           {"value_coef", c.value_coef},
           {"max_grad_norm", c.max_grad_norm},
           {"hidden", c.hidden},
           {"d2rl", c.d2rl},
           {"initial_log_std", c.initial_log_std},
           {"num_envs", c.num_envs},
           {"workers", c.workers}};
}

void from_json(const Json& j, PpoConfig& c) {
  check_keys(j, "ppo",
             {"gamma", "gae_lambda", "learning_rate", "minibatch_size", "clip_epsilon",
              "epochs_per_update", "steps_per_update", "total_steps", "entropy_coef",
              "value_coef", "max_grad_norm", "hidden", "d2rl", "initial_log_std", "num_envs",
              "workers"});
  read_opt(j, "gamma", c.gamma);
  read_opt(j, "gae_lambda", c.gae_lambda);
  read_opt(j, "learning_rate", c.learning_rate);
  read_opt(j, "minibatch_size", c.minibatch_size);
  read_opt(j, "clip_epsilon", c.clip_epsilon);
  read_opt(j, "epochs_per_update", c.epochs_per_update);
  read_opt(j, "steps_per_update", c.steps_per_update);
  read_opt(j, "total_steps", c.total_steps);
  read_opt(j, "entropy_coef", c.entropy_coef);
  read_opt(j, "value_coef", c.value_coef);
  read_opt(j, "max_grad_norm", c.max_grad_norm);
  read_opt(j, "hidden", c.hidden);
  read_opt(j, "d2rl", c.d2rl);
  read_opt(j, "initial_log_std", c.initial_log_std);
  read_opt(j, "num_envs", c.num_envs);
  read_opt(j, "workers", c.workers);
}

void to_json(Json& j, const CurvePoint& p) {
  j = Json{{"update", p.update},
           {"steps", p.steps},
           {"mean_reward", p.mean_reward},
           {"success_rate", p.success_rate},
           {"collision_rate", p.collision_rate},
           {"episodes", p.episodes},
           {"mean_episode_return", p.mean_episode_return}};
}

}  // namespace lumennav::rl
