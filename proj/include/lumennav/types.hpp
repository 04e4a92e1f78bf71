#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>

namespace lumennav {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// Camera pose in world coordinates. The camera frame is x right, y down,
/// z forward (viewing axis); `orientation` maps camera-frame vectors to world.
struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  Vec3 forward() const { return orientation * Vec3::UnitZ(); }
  Vec3 right() const { return orientation * Vec3::UnitX(); }
  Vec3 down() const { return orientation * Vec3::UnitY(); }
};

/// Pose looking along `direction` from `position`, with the image x axis kept
/// as close as possible to `right_hint`.
Pose look_along(const Vec3& position, const Vec3& direction,
                const Vec3& right_hint = Vec3::UnitX());

// splitmix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(a) ^ (b + 0x632BE59BD9B4E019ull));
}

}  // namespace lumennav
