#include "dsf/config.hpp"

#include <cstdint>
#include <fstream>
#include <set>
#include <type_traits>
#include <vector>

#include "dsf/errors.hpp"

namespace dsf {
namespace {

using nlohmann::json;

template <typename T>
struct is_unsigned_vector : std::false_type {};
template <typename U>
struct is_unsigned_vector<std::vector<U>> : std::bool_constant<std::is_unsigned_v<U> && !std::is_same_v<U, bool>> {};

bool non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

// Reads fields of one JSON object and rejects any key nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config section '" + path_ + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!non_negative_integer(*it)) {
        throw ConfigError("config key '" + path_ + "." + key + "' must be a non-negative integer");
      }
    }
    if constexpr (is_unsigned_vector<T>::value) {
      if (!it->is_array()) throw ConfigError("config key '" + path_ + "." + key + "' must be an array");
      for (const json& e : *it) {
        if (!non_negative_integer(e)) {
          throw ConfigError("config key '" + path_ + "." + key + "' must hold non-negative integers");
        }
      }
    }
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + path_ + "." + key + "' has the wrong type");
    }
  }

  template <typename T>
  void read_pair(const char* key, T& lo, T& hi) {
    std::vector<T> v{lo, hi};
    read(key, v);
    if (v.size() != 2) throw ConfigError("config key '" + path_ + "." + key + "' must be a [lo, hi] pair");
    lo = v[0];
    hi = v[1];
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + path(it.key().c_str()) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void parse_segnet(const json& j, SegNetConfig& c) {
  Section s(j, "segnet");
  s.read("stage_channels", c.stage_channels);
  s.read("kernel_size", c.kernel_size);
  s.read("out_channels", c.out_channels);
  s.finish();
}

void parse_deeplab(const json& j, ASPPConfig& c) {
  Section s(j, "deeplab");
  s.read("dilation_rates", c.dilation_rates);
  s.read("branch_channels", c.branch_channels);
  s.read("entry_channels", c.entry_channels);
  s.read("output_stride", c.output_stride);
  s.read("out_channels", c.out_channels);
  s.finish();
}

void parse_fusion(const json& j, FusionConfig& c) {
  Section s(j, "fusion");
  s.read("threshold", c.threshold);
  s.read("reduction", c.reduction);
  s.finish();
}

void parse_loss(const json& j, LossConfig& c) {
  Section s(j, "loss");
  s.read("alpha", c.alpha);
  s.read("dice_smooth", c.dice_smooth);
  s.read("prob_clamp", c.prob_clamp);
  s.finish();
}

void parse_train(const json& j, TrainConfig& c) {
  Section s(j, "train");
  s.read("lr0", c.lr0);
  s.read("lr_min", c.lr_min);
  s.read("weight_decay", c.weight_decay);
  s.read("batch_size", c.batch_size);
  s.read("epochs", c.epochs);
  s.read("seed", c.seed);
  s.finish();
}

void parse_augmentation(const json& j, AugmentationConfig& c) {
  Section s(j, "data.augmentation");
  s.read("rotate_90s", c.rotate_90s);
  s.read("hflip_p", c.hflip_p);
  s.read("vflip_p", c.vflip_p);
  s.read_pair("contrast_range", c.contrast_lo, c.contrast_hi);
  s.finish();
}

void parse_scene(const json& j, SceneSpec& c) {
  Section s(j, "data.scene");
  s.read("size", c.size);
  s.read_pair("slick_count_range", c.slick_count_min, c.slick_count_max);
  s.read("slick_darkening", c.slick_darkening);
  s.read_pair("wake_count_range", c.wake_count_min, c.wake_count_max);
  s.read("wake_darkening", c.wake_darkening);
  s.read("speckle_looks", c.speckle_looks);
  s.read("background_level", c.background_level);
  s.read("seed", c.seed);
  s.finish();
}

void parse_data(const json& j, DataConfig& c) {
  Section s(j, "data");
  s.read("root", c.root);
  s.read("tile_size", c.tile_size);
  s.read("split_ratio", c.split_ratio);
  if (const json* a = s.child("augmentation")) parse_augmentation(*a, c.augmentation);
  if (const json* sc = s.child("scene")) parse_scene(*sc, c.scene);
  s.finish();
}

json segnet_json(const SegNetConfig& c) {
  return {{"stage_channels", c.stage_channels}, {"kernel_size", c.kernel_size}, {"out_channels", c.out_channels}};
}

json deeplab_json(const ASPPConfig& c) {
  return {{"dilation_rates", c.dilation_rates},
          {"branch_channels", c.branch_channels},
          {"entry_channels", c.entry_channels},
          {"output_stride", c.output_stride},
          {"out_channels", c.out_channels}};
}

json fusion_json(const FusionConfig& c) { return {{"threshold", c.threshold}, {"reduction", c.reduction}}; }

}  // namespace

void DataConfig::validate() const {
  if (tile_size < 8) throw ConfigError("data.tile_size must be >= 8");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("data.split_ratio must lie in (0, 1)");
  augmentation.validate();
  scene.validate();
}

void GlobalConfig::validate() const {
  model.validate();
  loss.validate();
  train.validate();
  data.validate();
  if (data.tile_size % model.spatial_multiple() != 0) {
    throw ConfigError("data.tile_size " + std::to_string(data.tile_size) + " must be a multiple of " +
                      std::to_string(model.spatial_multiple()));
  }
}

GlobalConfig parse_config(const json& j) {
  GlobalConfig cfg;
  Section root(j, "");
  if (const json* s = root.child("segnet")) parse_segnet(*s, cfg.model.segnet);
  if (const json* s = root.child("deeplab")) parse_deeplab(*s, cfg.model.deeplab);
  if (const json* s = root.child("fusion")) parse_fusion(*s, cfg.model.fusion);
  if (const json* s = root.child("loss")) parse_loss(*s, cfg.loss);
  if (const json* s = root.child("train")) parse_train(*s, cfg.train);
  if (const json* s = root.child("data")) parse_data(*s, cfg.data);
  root.finish();
  cfg.validate();
  return cfg;
}

GlobalConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& ex) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + ex.what());
  }
  return parse_config(j);
}

json to_json(const ModelConfig& c) {
  return {{"segnet", segnet_json(c.segnet)}, {"deeplab", deeplab_json(c.deeplab)}, {"fusion", fusion_json(c.fusion)}};
}

ModelConfig parse_model_config(const json& j) {
  ModelConfig c;
  Section root(j, "");
  if (const json* s = root.child("segnet")) parse_segnet(*s, c.segnet);
  if (const json* s = root.child("deeplab")) parse_deeplab(*s, c.deeplab);
  if (const json* s = root.child("fusion")) parse_fusion(*s, c.fusion);
  root.finish();
  c.validate();
  return c;
}

json to_json(const GlobalConfig& c) {
  const AugmentationConfig& a = c.data.augmentation;
  const SceneSpec& s = c.data.scene;
  json j = to_json(c.model);
  j["loss"] = {{"alpha", c.loss.alpha}, {"dice_smooth", c.loss.dice_smooth}, {"prob_clamp", c.loss.prob_clamp}};
  j["train"] = {{"lr0", c.train.lr0},
                {"lr_min", c.train.lr_min},
                {"weight_decay", c.train.weight_decay},
                {"batch_size", c.train.batch_size},
                {"epochs", c.train.epochs},
                {"seed", c.train.seed}};
  j["data"] = {
      {"root", c.data.root},
      {"tile_size", c.data.tile_size},
      {"split_ratio", c.data.split_ratio},
      {"augmentation",
       {{"rotate_90s", a.rotate_90s},
        {"hflip_p", a.hflip_p},
        {"vflip_p", a.vflip_p},
        {"contrast_range", {a.contrast_lo, a.contrast_hi}}}},
      {"scene",
       {{"size", s.size},
        {"slick_count_range", {s.slick_count_min, s.slick_count_max}},
        {"slick_darkening", s.slick_darkening},
        {"wake_count_range", {s.wake_count_min, s.wake_count_max}},
        {"wake_darkening", s.wake_darkening},
        {"speckle_looks", s.speckle_looks},
        {"background_level", s.background_level},
        {"seed", s.seed}}}};
  return j;
}

}  // namespace dsf
