#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lumennav/types.hpp"

namespace lumennav {

struct NearestPointResult {
  double s_star = 0.0;  // arclength, mm
  Vec3 point = Vec3::Zero();
  double distance = 0.0;
  double radius_at = 0.0;
};

/// Chordal Catmull-Rom spline through every control point, with a per-point
/// lumen radius and a precomputed arclength table.
///
/// The end tangents come from phantom points reflected through the first and
/// last control point, so the curve starts at control_points.front() and ends
/// at control_points.back(). Radius is piecewise linear in arclength between
/// control points. All queries take arclength `s` in [0, length()].
class CenterlineSpline {
 public:
  CenterlineSpline(std::vector<Vec3> control_points, std::vector<double> radii);

  double length() const { return cumulative_.back(); }

  Vec3 point_at(double s) const;
  Vec3 tangent_at(double s) const;
  double radius_at(double s) const;
  double curvature_at(double s) const;

  /// Global nearest point: coarse scan of the sample table followed by
  /// golden-section refinement on the spline itself.
  NearestPointResult nearest(const Vec3& p) const;

  /// Arclength of the control point `i` along the curve.
  double control_arclength(std::size_t i) const;

  std::span<const Vec3> control_points() const { return points_; }
  std::span<const double> radii() const { return radii_; }
  double min_radius() const;
  double max_radius() const;

  /// Dense uniform-in-arclength samples (spacing close to `sample_spacing()`).
  std::span<const Vec3> samples() const { return sample_points_; }
  std::span<const double> sample_arclengths() const { return sample_s_; }
  double sample_spacing() const { return sample_spacing_; }

 private:
  struct Segment {
    Vec3 a, b, c, d;  // p(u) = a + b u + c u^2 + d u^3, u in [0,1]
    Vec3 eval(double u) const { return a + u * (b + u * (c + u * d)); }
    Vec3 deriv(double u) const { return b + u * (2.0 * c + u * 3.0 * d); }
    Vec3 deriv2(double u) const { return 2.0 * c + 6.0 * u * d; }
  };

  struct Location {
    std::size_t segment;
    double u;
  };

  Location locate(double s) const;
  double check_s(double s) const;
  double segment_arclength(std::size_t seg, double u0, double u1) const;

  std::vector<Vec3> points_;
  std::vector<double> radii_;
  std::vector<Segment> segments_;
  // arc table: per segment kSubdivisions+1 cumulative values
  std::vector<double> arc_table_;
  std::vector<double> cumulative_;  // arclength at each control point
  std::vector<Vec3> sample_points_;
  std::vector<double> sample_s_;
  double sample_spacing_ = 1.0;

  static constexpr std::size_t kSubdivisions = 32;
};

/// Spline sampled as a polyline with per-vertex radius, used by the renderer
/// for fast local distance queries.
class CenterlinePolyline {
 public:
  explicit CenterlinePolyline(const CenterlineSpline& spline);

  struct Projection {
    double distance;
    double radius;
    double s;
  };

  /// Projection onto the polyline found by hill-climbing over segments from
  /// `hint` (updated in place). Valid while the query stays inside a tube of
  /// radius smaller than the local curvature radius.
  Projection project_local(const Vec3& p, std::size_t& hint) const;

  /// Segment index closest to `s`.
  std::size_t segment_at(double s) const;

 private:
  double segment_distance2(std::size_t i, const Vec3& p, double& t) const;

  std::vector<Vec3> points_;
  std::vector<double> s_;
  std::vector<double> radius_;
  double spacing_;
};

enum class ProfileTag { simple, complex, custom };

std::string to_string(ProfileTag tag);
ProfileTag profile_from_string(const std::string& name);

/// Radius of the endoscope tip body, mm.
inline constexpr double kTipRadius = 5.0;

/// A lumen: the tube of varying radius swept around a centerline. Immutable.
class TubeEnvironment {
 public:
  TubeEnvironment(CenterlineSpline centerline, ProfileTag profile,
                  std::uint64_t texture_seed, double far_clip = 300.0,
                  double texture_amplitude = 0.05);

  const CenterlineSpline& centerline() const { return centerline_; }
  const CenterlinePolyline& polyline() const { return polyline_; }
  ProfileTag profile() const { return profile_; }
  std::uint64_t texture_seed() const { return texture_seed_; }
  double far_clip() const { return far_clip_; }
  /// Texture radius perturbation as a fraction of local radius, in [0, 0.1].
  double texture_amplitude() const { return texture_amplitude_; }

  NearestPointResult nearest_on_centerline(const Vec3& p) const {
    return centerline_.nearest(p);
  }
  /// radius_at(s*) - distance; positive inside the lumen.
  double wall_distance(const Vec3& p) const;

  TubeEnvironment with_texture_amplitude(double amplitude) const;
  TubeEnvironment with_far_clip(double far_clip) const;

 private:
  CenterlineSpline centerline_;
  CenterlinePolyline polyline_;
  ProfileTag profile_;
  std::uint64_t texture_seed_;
  double far_clip_;
  double texture_amplitude_;
};

CenterlineSpline build_centerline(std::vector<Vec3> control_points,
                                  std::vector<double> radii);

/// Procedural colon-like lumen. `simple`: 3-5 gentle bends (bend radius at
/// least 4x lumen radius). `complex`: 6-10 bends, at least two of them with
/// bend radius at most 2.5x lumen radius. Pure function of (profile, seed).
TubeEnvironment generate_environment(ProfileTag profile, std::uint64_t seed);

/// Straight tube along +z from the origin with constant radius.
TubeEnvironment make_straight_tube(double length, double radius,
                                   double far_clip = 300.0,
                                   double texture_amplitude = 0.0,
                                   std::uint64_t texture_seed = 0);

/// Number of distinct bends: arclength runs where curvature exceeds
/// `curvature_threshold` (1/mm), sampled every `step` mm. Runs separated by
/// less than `merge_gap` mm count as one bend.
int count_bends(const CenterlineSpline& spline, double curvature_threshold,
                double step = 1.0, double merge_gap = 20.0);

}  // namespace lumennav
