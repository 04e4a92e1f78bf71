#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include "lumennav/render.hpp"
#include "lumennav/serialization.hpp"

namespace lumennav {

DatasetManifest export_dataset(const TubeEnvironment& env, int count,
                               std::uint64_t seed,
                               const std::filesystem::path& out_dir,
                               const DatasetOptions& options) {
  if (count < 1) throw std::invalid_argument("dataset count must be at least 1");
  if (options.fov_min_deg > options.fov_max_deg || options.light_min > options.light_max) {
    throw std::invalid_argument("dataset ranges must satisfy min <= max");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw std::runtime_error("cannot create output directory '" + out_dir.string() + "'");
  }

  std::mt19937_64 rng(mix_seed(seed, 0xDA7Au));
  std::uniform_real_distribution<double> fov_dist(options.fov_min_deg, options.fov_max_deg);
  std::uniform_real_distribution<double> light_dist(options.light_min, options.light_max);

  DatasetManifest manifest;
  manifest.seed = seed;
  manifest.config_hash = options.config_hash;
  for (int i = 0; i < count; ++i) {
    DatasetSample sample;
    sample.index = i;
    sample.pose = sample_interior_pose(env, rng, options.min_clearance, options.max_tilt_deg);
    sample.fov_deg = fov_dist(rng);
    sample.light_intensity = light_dist(rng);
    char name[64];
    std::snprintf(name, sizeof(name), "rgb_%05d.ppm", i);
    sample.rgb_file = name;
    std::snprintf(name, sizeof(name), "depth_%05d.pfm", i);
    sample.depth_file = name;

    CameraIntrinsics cam;
    cam.width = options.width;
    cam.height = options.height;
    cam.far_clip = options.far_clip;
    cam.vertical_fov_deg = sample.fov_deg;
    write_ppm(out_dir / sample.rgb_file,
              render_rgb(env, sample.pose, cam, sample.light_intensity));
    write_pfm(out_dir / sample.depth_file, render_depth(env, sample.pose, cam));
    manifest.samples.push_back(std::move(sample));
  }

  nlohmann::ordered_json doc = manifest;
  doc["camera"] = {{"width", options.width},
                   {"height", options.height},
                   {"far_clip", options.far_clip}};
  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in '" + out_dir.string() + "'");
  out << doc.dump(2) << "\n";
  return manifest;
}

}  // namespace lumennav
