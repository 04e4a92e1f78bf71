#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace lumennav {

using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Per-pixel range along the viewing ray (mm), indexed (row, col).
/// Invalid pixels hold 0 and are flagged false in `valid`.
struct DepthImage {
  Eigen::ArrayXXd range;
  MaskArray valid;
  double far_clip = 300.0;

  DepthImage() = default;
  DepthImage(int width, int height, double far_clip_mm)
      : range(Eigen::ArrayXXd::Zero(height, width)),
        valid(MaskArray::Constant(height, width, false)),
        far_clip(far_clip_mm) {}

  int width() const { return static_cast<int>(range.cols()); }
  int height() const { return static_cast<int>(range.rows()); }
  long valid_count() const { return valid.count(); }

  bool operator==(const DepthImage& o) const {
    return far_clip == o.far_clip && range.rows() == o.range.rows() && range.cols() == o.range.cols() &&
           (range == o.range).all() && (valid == o.valid).all();
  }
};

/// 8-bit interleaved RGB raster, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* at(int row, int col) {
    return &data[(static_cast<std::size_t>(row) * width + col) * 3];
  }
  const std::uint8_t* at(int row, int col) const {
    return &data[(static_cast<std::size_t>(row) * width + col) * 3];
  }

  bool operator==(const RgbImage&) const = default;
};

// PFM: single channel, little-endian (scale -1.0), rows stored bottom-to-top.
// A comment line after the magic records depth semantics and far clip;
// invalid pixels are written as 0.
void write_pfm(const std::filesystem::path& path, const DepthImage& depth);
DepthImage read_pfm(const std::filesystem::path& path);

// Binary PPM (P6), maxval 255.
void write_ppm(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_ppm(const std::filesystem::path& path);

}  // namespace lumennav
