#include "dsf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "dsf/errors.hpp"

namespace dsf {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put_f32(std::vector<char>& out, float f) {
  auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

float get_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<float>(bits);
}

}  // namespace

void save_checkpoint(const fs::path& dir, const ParamStore& params, const CheckpointMeta& meta, const json& config) {
  fs::create_directories(dir);
  json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["config"] = config;
  manifest["training"] = {{"epoch", meta.epoch}, {"val_iou", meta.val_iou}, {"seed", meta.seed}};
  manifest["tensors"] = json::array();
  std::vector<char> blob;
  blob.reserve(params.numel() * 4);
  for (const auto& [name, p] : params) {
    const Shape& s = p.value.shape();
    manifest["tensors"].push_back(
        {{"name", name}, {"shape", {s.n, s.c, s.h, s.w}}, {"offset", blob.size()}, {"count", p.value.size()}});
    for (double v : p.value.values()) put_f32(blob, static_cast<float>(v));
  }
  manifest["weights_bytes"] = blob.size();

  std::ofstream mf(dir / "manifest.json", std::ios::binary);
  mf << manifest.dump(2) << '\n';
  std::ofstream wf(dir / "weights.bin", std::ios::binary);
  wf.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!mf || !wf) throw DataError("cannot write checkpoint to '" + dir.string() + "'");
}

Checkpoint load_checkpoint(const fs::path& dir) {
  std::ifstream mf(dir / "manifest.json", std::ios::binary);
  if (!mf) throw DataError("checkpoint '" + dir.string() + "' has no manifest.json");
  std::ifstream wf(dir / "weights.bin", std::ios::binary);
  if (!wf) throw DataError("checkpoint '" + dir.string() + "' has no weights.bin");
  const std::vector<char> blob((std::istreambuf_iterator<char>(wf)), std::istreambuf_iterator<char>());

  Checkpoint ck;
  try {
    const json manifest = json::parse(mf);
    const int version = manifest.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
      throw DataError("checkpoint '" + dir.string() + "' has format version " + std::to_string(version) +
                      ", expected " + std::to_string(kCheckpointVersion));
    }
    ck.config = manifest.at("config");
    const json& tr = manifest.at("training");
    ck.meta = CheckpointMeta{tr.at("epoch").get<std::size_t>(), tr.at("val_iou").get<double>(),
                             tr.at("seed").get<std::uint64_t>()};
    const auto expected_bytes = manifest.at("weights_bytes").get<std::size_t>();
    if (blob.size() != expected_bytes) {
      throw DataError("checkpoint '" + dir.string() + "' weights.bin has " + std::to_string(blob.size()) +
                      " bytes, manifest lists " + std::to_string(expected_bytes));
    }
    std::size_t cursor = 0;
    for (const json& t : manifest.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      const auto dims = t.at("shape").get<std::vector<std::size_t>>();
      if (dims.size() != 4) throw DataError("checkpoint tensor '" + name + "' is not rank 4");
      const Shape shape{dims[0], dims[1], dims[2], dims[3]};
      const auto count = t.at("count").get<std::size_t>();
      const auto offset = t.at("offset").get<std::size_t>();
      if (count != shape.numel()) {
        throw DataError("checkpoint tensor '" + name + "' count " + std::to_string(count) + " disagrees with shape " +
                        shape.str());
      }
      if (offset != cursor || offset + 4 * count > blob.size()) {
        throw DataError("checkpoint tensor '" + name + "' has an invalid byte offset");
      }
      std::vector<double> values(count);
      for (std::size_t i = 0; i < count; ++i) values[i] = get_f32(blob.data() + offset + 4 * i);
      ck.params.add(name, Tensor(shape, std::move(values)));
      cursor = offset + 4 * count;
    }
    if (cursor != blob.size()) throw DataError("checkpoint '" + dir.string() + "' weights.bin has trailing bytes");
  } catch (const json::exception& ex) {
    throw DataError("malformed checkpoint manifest in '" + dir.string() + "': " + ex.what());
  } catch (const ShapeError& ex) {
    throw DataError("checkpoint '" + dir.string() + "': " + ex.what());
  }
  return ck;
}

}  // namespace dsf
