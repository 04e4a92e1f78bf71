#include "lumennav/perception.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <stdexcept>
#include <vector>

namespace lumennav {

void DegradationProfile::validate() const {
  if (!(sigma_mult >= 0.0) || !std::isfinite(sigma_mult)) {
    throw std::invalid_argument("sigma_mult must be non-negative");
  }
  if (!(blur_radius >= 0.0) || !std::isfinite(blur_radius)) {
    throw std::invalid_argument("blur_radius must be non-negative");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate <= 0.2)) {
    throw std::invalid_argument("dropout_rate must lie in [0, 0.2]");
  }
  if (!(outlier_scale >= 0.0) || !std::isfinite(outlier_scale)) {
    throw std::invalid_argument("outlier_scale must be non-negative");
  }
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw std::invalid_argument("noise_scale must be non-negative");
  }
}

namespace {

// Normalized Gaussian convolution restricted to valid pixels.
Eigen::ArrayXXd masked_blur(const Eigen::ArrayXXd& values, const MaskArray& valid,
                            double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (int k = -radius; k <= radius; ++k) {
    kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * k * k / (sigma * sigma));
  }
  const Eigen::ArrayXXd weight = valid.cast<double>();
  const Eigen::ArrayXXd weighted = values * weight;
  const long rows = values.rows(), cols = values.cols();
  Eigen::ArrayXXd num_h = Eigen::ArrayXXd::Zero(rows, cols);
  Eigen::ArrayXXd den_h = Eigen::ArrayXXd::Zero(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      double num = 0.0, den = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const long cc = c + k;
        if (cc < 0 || cc >= cols) continue;
        const double w = kernel[static_cast<std::size_t>(k + radius)];
        num += w * weighted(r, cc);
        den += w * weight(r, cc);
      }
      num_h(r, c) = num;
      den_h(r, c) = den;
    }
  }
  Eigen::ArrayXXd out = values;
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      if (!valid(r, c)) continue;
      double num = 0.0, den = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const long rr = r + k;
        if (rr < 0 || rr >= rows) continue;
        const double w = kernel[static_cast<std::size_t>(k + radius)];
        num += w * num_h(rr, c);
        den += w * den_h(rr, c);
      }
      out(r, c) = num / den;
    }
  }
  return out;
}

// Unit-variance Gaussian field with Gaussian correlation of width `sigma` px.
// Each output is a weighted sum of white noise normalized by the root of the
// summed squared weights, so the marginal stays N(0, 1) up to the borders.
Eigen::ArrayXXd correlated_field(long rows, long cols, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::ArrayXXd white(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) white(r, c) = normal(rng);
  }
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (int k = -radius; k <= radius; ++k) {
    kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * k * k / (sigma * sigma));
  }
  auto pass = [&](const Eigen::ArrayXXd& in, Eigen::ArrayXXd& norm2, bool horizontal) {
    Eigen::ArrayXXd out = Eigen::ArrayXXd::Zero(rows, cols);
    Eigen::ArrayXXd w2 = Eigen::ArrayXXd::Zero(rows, cols);
    for (long r = 0; r < rows; ++r) {
      for (long c = 0; c < cols; ++c) {
        double sum = 0.0, sq = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const long rr = horizontal ? r : r + k;
          const long cc = horizontal ? c + k : c;
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
          const double w = kernel[static_cast<std::size_t>(k + radius)];
          sum += w * in(rr, cc);
          sq += w * w * norm2(rr, cc);
        }
        out(r, c) = sum;
        w2(r, c) = sq;
      }
    }
    norm2 = w2;
    return out;
  };
  Eigen::ArrayXXd norm2 = Eigen::ArrayXXd::Ones(rows, cols);
  Eigen::ArrayXXd field = pass(white, norm2, true);
  field = pass(field, norm2, false);
  return field / norm2.sqrt();
}

void check_pair(const DepthImage& pred, const DepthImage& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw std::invalid_argument("depth images differ in size");
  }
}

}  // namespace

DepthImage degrade_depth(const DepthImage& gt, const DegradationProfile& profile,
                         std::uint64_t frame_seed) {
  profile.validate();
  if (profile.is_identity()) return gt;

  DepthImage out = gt;
  const long rows = gt.range.rows(), cols = gt.range.cols();
  if (profile.sigma_mult > 0.0) {
    std::mt19937_64 rng(mix_seed(frame_seed, 0x5161u));
    if (profile.noise_scale > 0.0) {
      const Eigen::ArrayXXd field = correlated_field(rows, cols, profile.noise_scale, rng);
      out.range = (gt.valid).select(out.range * (profile.sigma_mult * field).exp(), out.range);
    } else {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (long r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) {
          if (!gt.valid(r, c)) continue;
          out.range(r, c) *= std::exp(profile.sigma_mult * normal(rng));
        }
      }
    }
  }
  if (profile.blur_radius > 0.0) {
    out.range = masked_blur(out.range, gt.valid, profile.blur_radius);
  }
  if (profile.dropout_rate > 0.0) {
    std::mt19937_64 rng(mix_seed(frame_seed, 0x0D7Bu));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Eigen::ArrayXXd smoothed = out.range;
    const double up = 1.0 + profile.outlier_scale;
    for (long r = 0; r < rows; ++r) {
      for (long c = 0; c < cols; ++c) {
        if (!gt.valid(r, c)) continue;
        const double u = unit(rng);
        const double coin = unit(rng);
        if (u >= profile.dropout_rate) continue;
        double sum = 0.0;
        int n = 0;
        for (long rr = std::max(0L, r - 2); rr <= std::min(rows - 1, r + 2); ++rr) {
          for (long cc = std::max(0L, c - 2); cc <= std::min(cols - 1, c + 2); ++cc) {
            if (!gt.valid(rr, cc)) continue;
            sum += smoothed(rr, cc);
            ++n;
          }
        }
        out.range(r, c) = (sum / n) * (coin < 0.5 ? up : 1.0 / up);
      }
    }
  }
  constexpr double kMinDepth = 1e-3;
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      if (!gt.valid(r, c)) {
        out.range(r, c) = 0.0;
        continue;
      }
      out.range(r, c) = std::clamp(out.range(r, c), kMinDepth, gt.far_clip);
    }
  }
  return out;
}

double abs_rel(const DepthImage& pred, const DepthImage& gt) {
  check_pair(pred, gt);
  double sum = 0.0;
  long n = 0;
  for (long r = 0; r < gt.range.rows(); ++r) {
    for (long c = 0; c < gt.range.cols(); ++c) {
      if (!pred.valid(r, c) || !gt.valid(r, c)) continue;
      sum += std::abs(pred.range(r, c) - gt.range(r, c)) / gt.range(r, c);
      ++n;
    }
  }
  if (n == 0) throw std::domain_error("abs_rel: no jointly valid pixels");
  return sum / static_cast<double>(n);
}

double delta1(const DepthImage& pred, const DepthImage& gt) {
  check_pair(pred, gt);
  long hits = 0, n = 0;
  for (long r = 0; r < gt.range.rows(); ++r) {
    for (long c = 0; c < gt.range.cols(); ++c) {
      if (!pred.valid(r, c) || !gt.valid(r, c)) continue;
      const double ratio = pred.range(r, c) / gt.range(r, c);
      if (std::max(ratio, 1.0 / ratio) < 1.25) ++hits;
      ++n;
    }
  }
  if (n == 0) throw std::domain_error("delta1: no jointly valid pixels");
  return static_cast<double>(hits) / static_cast<double>(n);
}

NavigationTarget extract_navigation_point(const DepthImage& depth,
                                          const ExtractionSettings& settings) {
  if (settings.n_levels < 1 || settings.level < 1 || settings.level > settings.n_levels) {
    throw std::invalid_argument("navigation level must lie in [1, n_levels]");
  }
  const int rows = depth.height(), cols = depth.width();
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (depth.valid(r, c)) values.push_back(depth.range(r, c));
    }
  }
  if (values.empty()) throw std::invalid_argument("depth map has no valid pixels");
  std::sort(values.begin(), values.end());
  NavigationTarget target;
  if (values.front() == values.back()) return target;

  const long n = static_cast<long>(values.size());
  const long levels = settings.n_levels;
  const long band = settings.order == LevelOrder::near_first
                        ? settings.level
                        : settings.n_levels + 1 - settings.level;
  auto quantile = [&](long k) {  // nearest-rank value for p = k / levels
    const long idx = (k * n + levels - 1) / levels - 1;
    return values[static_cast<std::size_t>(std::clamp(idx, 0L, n - 1))];
  };
  const double upper = quantile(band);
  const bool open_below = band == 1;
  const double lower = open_below ? 0.0 : quantile(band - 1);

  const bool beyond = settings.region == LevelRegion::beyond;
  MaskArray in_band = MaskArray::Constant(rows, cols, false);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!depth.valid(r, c)) {
        in_band(r, c) = beyond;
        continue;
      }
      const double v = depth.range(r, c);
      in_band(r, c) = (open_below || v > lower) && (beyond || v <= upper);
    }
  }

  // Largest 4-connected component, first in raster order on ties.
  Eigen::ArrayXXi label = Eigen::ArrayXXi::Constant(rows, cols, -1);
  long best_size = 0;
  double best_sx = 0.0, best_sy = 0.0;
  std::vector<std::pair<int, int>> stack;
  int next_label = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!in_band(r, c) || label(r, c) >= 0) continue;
      long size = 0;
      double sx = 0.0, sy = 0.0;
      stack.clear();
      stack.emplace_back(r, c);
      label(r, c) = next_label;
      while (!stack.empty()) {
        const auto [pr, pc] = stack.back();
        stack.pop_back();
        ++size;
        sx += pc + 0.5;
        sy += pr + 0.5;
        constexpr int dr[4] = {-1, 1, 0, 0};
        constexpr int dc[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const int nr = pr + dr[k], nc = pc + dc[k];
          if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
          if (!in_band(nr, nc) || label(nr, nc) >= 0) continue;
          label(nr, nc) = next_label;
          stack.emplace_back(nr, nc);
        }
      }
      ++next_label;
      if (size > best_size) {
        best_size = size;
        best_sx = sx;
        best_sy = sy;
      }
    }
  }
  target.level_pixel_count = best_size;
  if (best_size < settings.min_component_pixels || best_size == 0) return target;
  target.t_x = best_sx / static_cast<double>(best_size);
  target.t_y = best_sy / static_cast<double>(best_size);
  target.valid = true;
  return target;
}

Observation encode_observation(const NavigationTarget& target, const CameraIntrinsics& cam,
                               EncodingMode mode) {
  if (!target.valid) throw std::invalid_argument("cannot encode an invalid navigation target");
  const double w = cam.width, h = cam.height;
  const double cx = 0.5 * w, cy = 0.5 * h;
  Observation obs;
  obs.x_norm = std::clamp(2.0 * target.t_x / w - 1.0, -1.0, 1.0);
  obs.y_norm = std::clamp(2.0 * target.t_y / h - 1.0, -1.0, 1.0);
  obs.dx_norm = 2.0 * (target.t_x - cx) / w;
  obs.dy_norm = 2.0 * (target.t_y - cy) / h;
  if (mode == EncodingMode::literal) {
    obs.dx_norm -= 1.0;
    obs.dy_norm -= 1.0;
  }
  obs.dx_norm = std::clamp(obs.dx_norm, -1.0, 1.0);
  obs.dy_norm = std::clamp(obs.dy_norm, -1.0, 1.0);
  return obs;
}

}  // namespace lumennav
