#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lumennav/env.hpp"
#include "lumennav/geometry.hpp"
#include "lumennav/perception.hpp"
#include "lumennav/render.hpp"
#include "lumennav/rl/ppo.hpp"
#include "lumennav/trajectory.hpp"

// Insertion-ordered JSON keeps every written file byte-stable.
namespace lumennav {
using Json = nlohmann::ordered_json;
}

namespace nlohmann {

template <>
struct adl_serializer<Eigen::Vector3d> {
  static void to_json(ordered_json& j, const Eigen::Vector3d& v) { j = {v.x(), v.y(), v.z()}; }
  static void from_json(const ordered_json& j, Eigen::Vector3d& v) {
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-vector");
    v = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  }
};

// Stored as [w, x, y, z].
template <>
struct adl_serializer<Eigen::Quaterniond> {
  static void to_json(ordered_json& j, const Eigen::Quaterniond& q) {
    j = {q.w(), q.x(), q.y(), q.z()};
  }
  static void from_json(const ordered_json& j, Eigen::Quaterniond& q) {
    if (!j.is_array() || j.size() != 4) throw std::invalid_argument("expected a quaternion [w,x,y,z]");
    q = Eigen::Quaterniond(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                           j[3].get<double>());
  }
};

}  // namespace nlohmann

namespace lumennav {

/// Reads a whole JSON document. Throws std::runtime_error("file not found: ...")
/// for a missing path and std::runtime_error on a parse error.
Json load_json(const std::filesystem::path& path);
/// Pretty-printed with two-space indent and a trailing newline.
void save_json(const std::filesystem::path& path, const Json& doc);

void to_json(Json& j, const Pose& p);
void from_json(const Json& j, Pose& p);

void to_json(Json& j, const DatasetSample& s);
void to_json(Json& j, const DatasetManifest& m);

void to_json(Json& j, const CameraIntrinsics& c);
void from_json(const Json& j, CameraIntrinsics& c);

void to_json(Json& j, const DegradationProfile& p);
void from_json(const Json& j, DegradationProfile& p);

void to_json(Json& j, const DepthStats& s);

void to_json(Json& j, const ExtractionSettings& s);
void from_json(const Json& j, ExtractionSettings& s);

void to_json(Json& j, const RewardTerms& t);
void from_json(const Json& j, RewardTerms& t);

void to_json(Json& j, const EpisodeConfig& c);
void from_json(const Json& j, EpisodeConfig& c);

void to_json(Json& j, const RewardBreakdown& r);
void from_json(const Json& j, RewardBreakdown& r);

void to_json(Json& j, const StepRecord& r);
void from_json(const Json& j, StepRecord& r);

/// {control_points, radii, profile_tag, texture_seed, far_clip, texture_amplitude}
Json environment_to_json(const TubeEnvironment& env);
TubeEnvironment environment_from_json(const Json& j);
void save_environment(const std::filesystem::path& path, const TubeEnvironment& env);
TubeEnvironment load_environment(const std::filesystem::path& path);

/// One JSON object per line; every record carries the log's seed and config hash.
void write_trajectory_jsonl(const std::filesystem::path& path, const TrajectoryLog& log);
std::string trajectory_jsonl(const TrajectoryLog& log);
TrajectoryLog read_trajectory_jsonl(const std::filesystem::path& path);
/// Splits a multi-episode log on done records.
std::vector<TrajectoryLog> split_episodes(const TrajectoryLog& log);

}  // namespace lumennav

namespace lumennav::rl {

void to_json(Json& j, const PpoConfig& c);
void from_json(const Json& j, PpoConfig& c);
void to_json(Json& j, const CurvePoint& p);

}  // namespace lumennav::rl
