#pragma once

#include <cstdint>
#include <vector>

#include "dsf/rng.hpp"
#include "dsf/tensor.hpp"

namespace dsf {

struct SceneSpec {
  std::size_t size = 64;
  std::size_t slick_count_min = 0;
  std::size_t slick_count_max = 3;
  double slick_darkening = 0.3;
  std::size_t wake_count_min = 0;
  std::size_t wake_count_max = 2;
  double wake_darkening = 0.45;
  std::size_t speckle_looks = 4;
  double background_level = 0.6;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Oil slick footprint.
struct Ellipse {
  double cx, cy;  // pixel-centre coordinates
  double semi_major, semi_minor;
  double angle;  // radians

  bool contains(double x, double y) const;
};

/// Ship wake: a straight dark line 1-2 px thick.
struct Wake {
  double x0, y0, x1, y1;
  double thickness;

  bool contains(double x, double y) const;
};

/// One sinusoidal component of the smooth background modulation.
struct Swell {
  double amplitude;
  double fx, fy;  // cycles per tile
  double phase;
};

struct SceneLayout {
  std::vector<Ellipse> slicks;
  std::vector<Wake> wakes;
  std::vector<Swell> swells;
};

/// Noise-free rendering of a layout.
struct CleanScene {
  Tensor background;  // background_level times the +-10% smooth field
  Tensor intensity;   // background with slick and wake darkening applied
  Tensor mask;        // 1 inside slicks
  Tensor wake_mask;   // 1 on wake pixels (never part of `mask`)
};

struct SyntheticScene {
  Tensor image;  // speckled, clamped to [0, 1]
  Tensor mask;
  SceneLayout layout;
};

SceneLayout sample_layout(const SceneSpec& spec, Rng& rng);
CleanScene render_clean(const SceneLayout& layout, const SceneSpec& spec);

/// Multiplies each pixel by an independent Gamma(looks, 1/looks) factor (mean 1,
/// variance 1/looks). No clamping.
Tensor apply_speckle(const Tensor& clean, std::size_t looks, Rng& rng);

SyntheticScene synth_scene(const SceneSpec& spec, Rng& rng);
/// Scene `index` of the stream seeded by spec.seed; independent of generation order.
SyntheticScene synth_scene_at(const SceneSpec& spec, std::uint64_t index);

}  // namespace dsf
