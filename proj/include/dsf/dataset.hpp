#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dsf/synth.hpp"
#include "dsf/tensor.hpp"

namespace dsf {

enum class Split { kTrain, kTest };

const char* split_name(Split s);
Split parse_split(const std::string& name);

struct ManifestEntry {
  std::string stem;
  std::string image;  // relative to the dataset root
  std::string mask;
  Split split = Split::kTrain;
};

struct DatasetManifest {
  static constexpr int kFormatVersion = 1;

  std::vector<ManifestEntry> entries;
  std::uint64_t seed = 0;
  double split_ratio = 0.8;

  std::size_t count(Split s) const;
  void save(const std::filesystem::path& path) const;
  static DatasetManifest load(const std::filesystem::path& path);
};

/// Number of training items for n entries: ceil(ratio * n), kept within [1, n - 1].
std::size_t train_count(std::size_t n, double ratio);

/// Seeded Fisher-Yates shuffle, then the first train_count() entries are tagged train.
DatasetManifest split_dataset(std::vector<ManifestEntry> entries, double ratio, std::uint64_t seed);

/// Pairs images/<stem>.png with masks/<stem>.png under root, sorted by stem.
std::vector<ManifestEntry> scan_dataset(const std::filesystem::path& root);

struct Sample {
  std::string stem;
  Tensor image;  // (1, 1, s, s) in [0, 1]
  Tensor mask;   // (1, 1, s, s) in {0, 1}
};

/// Loads one split, resizing to tile_size and re-binarizing masks at 0.5.
std::vector<Sample> load_split(const std::filesystem::path& root, const DatasetManifest& manifest, Split split,
                               std::size_t tile_size);
/// Every entry regardless of tag.
std::vector<Sample> load_all(const std::filesystem::path& root, const DatasetManifest& manifest,
                             std::size_t tile_size);

/// Writes `count` synthetic scenes plus manifest.json; scene i uses synth_scene_at(spec, i).
DatasetManifest write_synthetic_dataset(const std::filesystem::path& root, std::size_t count, const SceneSpec& spec,
                                        double split_ratio);

}  // namespace dsf
