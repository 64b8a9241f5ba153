#include "dsf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include "json.hpp"

#include "dsf/errors.hpp"
#include "dsf/image_io.hpp"
#include "dsf/rng.hpp"

namespace dsf {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSplitStream = 0x53504c4954ULL;

Sample load_sample(const fs::path& root, const ManifestEntry& e, std::size_t tile_size) {
  Sample s{e.stem, load_tile(root / e.image), load_tile(root / e.mask)};
  if (s.image.shape() != s.mask.shape()) {
    throw DataError("image and mask sizes differ for '" + e.stem + "'");
  }
  s.image = resize_tile(s.image, tile_size);
  s.mask = resize_tile(s.mask, tile_size);
  for (double& v : s.mask.values()) v = v >= 0.5 ? 1.0 : 0.0;
  return s;
}

}  // namespace

const char* split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + name + "' (expected train or test)");
}

std::size_t DatasetManifest::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [s](const ManifestEntry& e) { return e.split == s; }));
}

void DatasetManifest::save(const fs::path& path) const {
  json j;
  j["format_version"] = kFormatVersion;
  j["seed"] = seed;
  j["split_ratio"] = split_ratio;
  j["entries"] = json::array();
  for (const ManifestEntry& e : entries) {
    j["entries"].push_back({{"stem", e.stem}, {"image", e.image}, {"mask", e.mask}, {"split", split_name(e.split)}});
  }
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("cannot write manifest '" + path.string() + "'");
}

DatasetManifest DatasetManifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  DatasetManifest m;
  try {
    const json j = json::parse(in);
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw DataError("manifest '" + path.string() + "' has unsupported format_version");
    }
    m.seed = j.at("seed").get<std::uint64_t>();
    m.split_ratio = j.at("split_ratio").get<double>();
    for (const json& e : j.at("entries")) {
      m.entries.push_back(ManifestEntry{e.at("stem").get<std::string>(), e.at("image").get<std::string>(),
                                        e.at("mask").get<std::string>(), parse_split(e.at("split").get<std::string>())});
    }
  } catch (const json::exception& ex) {
    throw DataError("malformed manifest '" + path.string() + "': " + ex.what());
  } catch (const ConfigError& ex) {
    throw DataError("malformed manifest '" + path.string() + "': " + ex.what());
  }
  return m;
}

std::size_t train_count(std::size_t n, double ratio) {
  const double exact = ratio * static_cast<double>(n);
  // Products like 0.8 * 8070 land a few ulps above the integer; treat those as exact.
  const double nearest = std::round(exact);
  const double k = std::abs(exact - nearest) < 1e-9 * std::max(1.0, exact) ? nearest : std::ceil(exact);
  return std::clamp<std::size_t>(static_cast<std::size_t>(k), 1, n - 1);
}

DatasetManifest split_dataset(std::vector<ManifestEntry> entries, double ratio, std::uint64_t seed) {
  if (entries.empty()) throw DataError("split_dataset: no entries");
  if (entries.size() < 2) throw DataError("split_dataset: need at least 2 entries");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");
  Rng rng(derive_seed(seed, kSplitStream, 0));
  for (std::size_t i = entries.size() - 1; i > 0; --i) {
    std::swap(entries[i], entries[rng.below(i + 1)]);
  }
  const std::size_t n_train = train_count(entries.size(), ratio);
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].split = i < n_train ? Split::kTrain : Split::kTest;
  return DatasetManifest{std::move(entries), seed, ratio};
}

std::vector<ManifestEntry> scan_dataset(const fs::path& root) {
  std::map<std::string, ManifestEntry> by_stem;
  const fs::path images = root / "images";
  if (!fs::is_directory(images)) throw DataError("'" + images.string() + "' is not a directory");
  for (const auto& f : fs::directory_iterator(images)) {
    if (!f.is_regular_file()) continue;
    const std::string stem = f.path().stem().string();
    const fs::path mask = root / "masks" / f.path().filename();
    if (!fs::is_regular_file(mask)) throw DataError("image '" + f.path().string() + "' has no mask");
    by_stem[stem] = ManifestEntry{stem, "images/" + f.path().filename().string(),
                                  "masks/" + f.path().filename().string(), Split::kTrain};
  }
  std::vector<ManifestEntry> out;
  for (auto& [stem, e] : by_stem) out.push_back(std::move(e));
  return out;
}

std::vector<Sample> load_split(const fs::path& root, const DatasetManifest& manifest, Split split,
                               std::size_t tile_size) {
  std::vector<Sample> out;
  for (const ManifestEntry& e : manifest.entries) {
    if (e.split == split) out.push_back(load_sample(root, e, tile_size));
  }
  return out;
}

std::vector<Sample> load_all(const fs::path& root, const DatasetManifest& manifest, std::size_t tile_size) {
  std::vector<Sample> out;
  for (const ManifestEntry& e : manifest.entries) out.push_back(load_sample(root, e, tile_size));
  return out;
}

DatasetManifest write_synthetic_dataset(const fs::path& root, std::size_t count, const SceneSpec& spec,
                                        double split_ratio) {
  if (count == 0) throw ConfigError("synthetic dataset count must be positive");
  spec.validate();
  fs::create_directories(root / "images");
  fs::create_directories(root / "masks");
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < count; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "scene_%05zu", i);
    const SyntheticScene scene = synth_scene_at(spec, i);
    ManifestEntry e{stem, std::string("images/") + stem + ".png", std::string("masks/") + stem + ".png",
                    Split::kTrain};
    save_tile(root / e.image, scene.image);
    save_mask(root / e.mask, scene.mask);
    entries.push_back(std::move(e));
  }
  DatasetManifest manifest;
  if (count >= 2) {
    manifest = split_dataset(std::move(entries), split_ratio, spec.seed);
  } else {
    manifest = DatasetManifest{std::move(entries), spec.seed, split_ratio};
  }
  manifest.save(root / "manifest.json");
  return manifest;
}

}  // namespace dsf
