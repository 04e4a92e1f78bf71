#include <stdexcept>

#include "lumennav/rl/ppo.hpp"
#include "lumennav/serialization.hpp"

namespace lumennav::rl {

namespace {

constexpr int kCheckpointVersion = 1;

Json vector_json(const Eigen::VectorXd& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd json_vector(const Json& j, Eigen::Index expected, const char* what) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != expected) {
    throw std::runtime_error(std::string("checkpoint field '") + what + "' has " +
                             std::to_string(values.size()) + " entries, expected " +
                             std::to_string(expected));
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), expected);
}

Json adam_json(const AdamState& a) {
  return Json{{"t", a.t}, {"m", vector_json(a.m)}, {"v", vector_json(a.v)}};
}

void adam_from(const Json& j, AdamState& a, Eigen::Index n) {
  a.t = j.at("t").get<long>();
  a.m = json_vector(j.at("m"), n, "adam.m");
  a.v = json_vector(j.at("v"), n, "adam.v");
}

}  // namespace

void save_checkpoint(const std::string& path, const ActorCritic& model, const PpoConfig& config,
                     const std::string& config_hash, const std::string& rng_state, long steps) {
  Json doc;
  doc["format"] = "lumennav-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["config_hash"] = config_hash;
  doc["steps"] = steps;
  doc["ppo"] = config;
  doc["actor"] = Json{{"parameters", vector_json(model.policy.net().parameters())},
                      {"log_std", vector_json(model.policy.log_std_param())},
                      {"adam", adam_json(model.actor_opt)}};
  doc["critic"] = Json{{"parameters", vector_json(model.value.net().parameters())},
                       {"adam", adam_json(model.critic_opt)}};
  doc["rng_state"] = rng_state;
  save_json(path, doc);
}

Checkpoint load_checkpoint(const std::string& path) {
  const Json doc = load_json(path);
  if (doc.value("format", std::string{}) != "lumennav-checkpoint") {
    throw std::runtime_error(path + " is not a policy checkpoint");
  }
  if (doc.at("version").get<int>() != kCheckpointVersion) {
    throw std::runtime_error(path + ": unsupported checkpoint version");
  }
  Checkpoint ck;
  ck.config = doc.at("ppo").get<PpoConfig>();
  ck.config.validate();
  ck.config_hash = doc.at("config_hash").get<std::string>();
  ck.rng_state = doc.at("rng_state").get<std::string>();
  ck.steps = doc.at("steps").get<long>();

  ck.model.policy = GaussianPolicy(kObservationDim, kActionDim, ck.config.hidden, ck.config.d2rl);
  ck.model.value = ValueFunction(kObservationDim, ck.config.hidden, ck.config.d2rl);
  auto& actor = ck.model.policy.net();
  auto& critic = ck.model.value.net();
  const Json& a = doc.at("actor");
  const Json& c = doc.at("critic");
  actor.parameters() = json_vector(a.at("parameters"), actor.parameter_count(), "actor");
  ck.model.policy.log_std_param() = json_vector(a.at("log_std"), kActionDim, "log_std");
  critic.parameters() = json_vector(c.at("parameters"), critic.parameter_count(), "critic");
  adam_from(a.at("adam"), ck.model.actor_opt, actor.parameter_count() + kActionDim);
  adam_from(c.at("adam"), ck.model.critic_opt, critic.parameter_count());
  if (!ck.model.finite()) throw std::runtime_error(path + ": non-finite weights");
  return ck;
}

}  // namespace lumennav::rl
