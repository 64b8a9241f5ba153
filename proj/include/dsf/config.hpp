#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "dsf/augment.hpp"
#include "dsf/loss.hpp"
#include "dsf/model.hpp"
#include "dsf/synth.hpp"
#include "dsf/trainer.hpp"

namespace dsf {

struct DataConfig {
  std::string root;  // dataset directory; the CLI --data flag overrides it
  std::size_t tile_size = 64;
  double split_ratio = 0.8;
  AugmentationConfig augmentation;
  SceneSpec scene;

  void validate() const;
};

/// Everything a run needs, as one JSON document with sections
/// segnet / deeplab / fusion / loss / train / data.
struct GlobalConfig {
  ModelConfig model;
  LossConfig loss;
  TrainConfig train;
  DataConfig data;

  void validate() const;
};

/// Strict parse: unknown keys anywhere are a ConfigError; omitted keys keep defaults.
GlobalConfig parse_config(const nlohmann::json& j);
GlobalConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const GlobalConfig& cfg);
nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig parse_model_config(const nlohmann::json& j);

}  // namespace dsf
