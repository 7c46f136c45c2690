#pragma once

// Writes a synthetic dataset to disk as image files plus a manifest, the same
// layout a converted real dataset would use:
//   stereo: left_NNNNN.ppm right_NNNNN.ppm disp_NNNNN.pfm mask_NNNNN.pgm
//   mono:   rgb_NNNNN.ppm depth_NNNNN.pfm (metric depth) mask_NNNNN.pgm
// and manifest.txt listing one "files ..." descriptor per sample.

#include <cstdio>
#include <filesystem>

#include "depthbench/data/dataset.hpp"
#include "depthbench/data/files.hpp"

namespace depthbench::bench {

struct GenDataOptions {
  data::TaskKind task = data::TaskKind::stereo;
  std::uint64_t seed = 11;
  std::size_t count = 16;
  std::size_t height = 48;
  std::size_t width = 96;
  std::size_t max_disp = 20;  // stereo only
};

/// Returns the manifest path.
inline std::filesystem::path generate_dataset(const GenDataOptions& opt, const std::filesystem::path& dir) {
  if (opt.count == 0) throw ConfigError("gen-data: count must be positive");
  data::DatasetIndex index;
  index.kind = opt.task;
  char name[32];
  for (std::size_t i = 0; i < opt.count; ++i) {
    std::snprintf(name, sizeof name, "%05zu", i);
    const std::string n = name;
    if (opt.task == data::TaskKind::stereo) {
      const auto s = data::synthetic_stereo_sample(opt.seed, i, opt.height, opt.width, opt.max_disp);
      data::write_file_atomic(dir / ("left_" + n + ".ppm"), data::write_pnm(s.left));
      data::write_file_atomic(dir / ("right_" + n + ".ppm"), data::write_pnm(s.right));
      data::write_file_atomic(dir / ("disp_" + n + ".pfm"), data::write_pfm(data::from_tensor(s.disparity)));
      data::write_file_atomic(dir / ("mask_" + n + ".pgm"), data::write_pnm(s.mask));
      index.descriptors.push_back("files left_" + n + ".ppm right_" + n + ".ppm disp_" + n + ".pfm mask_" + n + ".pgm");
    } else {
      const auto s = data::synthetic_mono_sample_metric(opt.seed, i, opt.height, opt.width);
      data::write_file_atomic(dir / ("rgb_" + n + ".ppm"), data::write_pnm(s.rgb));
      data::write_file_atomic(dir / ("depth_" + n + ".pfm"), data::write_pfm(data::from_tensor(s.depth)));
      data::write_file_atomic(dir / ("mask_" + n + ".pgm"), data::write_pnm(s.mask));
      index.descriptors.push_back("files rgb_" + n + ".ppm depth_" + n + ".pfm mask_" + n + ".pgm");
    }
  }
  const auto manifest = dir / "manifest.txt";
  data::write_file_atomic(manifest, data::write_manifest(index));
  return manifest;
}

}  // namespace depthbench::bench
