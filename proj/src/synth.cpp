#include "dsf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dsf/errors.hpp"

namespace dsf {
namespace {

constexpr std::uint64_t kSceneStream = 0x5343454e45ULL;
constexpr double kFieldSwing = 0.10;

double point_segment_distance(double px, double py, const Wake& w) {
  const double dx = w.x1 - w.x0;
  const double dy = w.y1 - w.y0;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - w.x0) * dx + (py - w.y0) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = w.x0 + t * dx - px;
  const double ey = w.y0 + t * dy - py;
  return std::sqrt(ex * ex + ey * ey);
}

}  // namespace

void SceneSpec::validate() const {
  if (size < 8) throw ConfigError("data.scene.size must be >= 8");
  if (slick_count_min > slick_count_max) throw ConfigError("data.scene.slick_count_range must be ordered");
  if (wake_count_min > wake_count_max) throw ConfigError("data.scene.wake_count_range must be ordered");
  if (!(slick_darkening > 0.0 && slick_darkening < 1.0)) {
    throw ConfigError("data.scene.slick_darkening must lie in (0, 1)");
  }
  if (!(wake_darkening > 0.0 && wake_darkening < 1.0)) {
    throw ConfigError("data.scene.wake_darkening must lie in (0, 1)");
  }
  if (speckle_looks < 1) throw ConfigError("data.scene.speckle_looks must be >= 1");
  if (!(background_level > 0.0 && background_level <= 1.0)) {
    throw ConfigError("data.scene.background_level must lie in (0, 1]");
  }
}

bool Ellipse::contains(double x, double y) const {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double u = ((x - cx) * c + (y - cy) * s) / semi_major;
  const double v = (-(x - cx) * s + (y - cy) * c) / semi_minor;
  return u * u + v * v <= 1.0;
}

bool Wake::contains(double x, double y) const { return point_segment_distance(x, y, *this) <= thickness / 2.0; }

SceneLayout sample_layout(const SceneSpec& spec, Rng& rng) {
  spec.validate();
  const double n = static_cast<double>(spec.size);
  SceneLayout layout;
  for (int k = 0; k < 3; ++k) {
    layout.swells.push_back(Swell{rng.uniform(0.5, 1.0), static_cast<double>(1 + rng.below(2)),
                                  static_cast<double>(1 + rng.below(2)), rng.uniform(0.0, 2.0 * std::numbers::pi)});
  }
  const std::size_t slicks = spec.slick_count_min + rng.below(spec.slick_count_max - spec.slick_count_min + 1);
  for (std::size_t i = 0; i < slicks; ++i) {
    const double a = rng.uniform(0.10, 0.25) * n;
    const double b = a * rng.uniform(0.4, 1.0);
    layout.slicks.push_back(
        Ellipse{rng.uniform(0.2, 0.8) * n, rng.uniform(0.2, 0.8) * n, a, b, rng.uniform(0.0, std::numbers::pi)});
  }
  const std::size_t wakes = spec.wake_count_min + rng.below(spec.wake_count_max - spec.wake_count_min + 1);
  for (std::size_t i = 0; i < wakes; ++i) {
    const double x0 = rng.uniform(0.1, 0.9) * n;
    const double y0 = rng.uniform(0.1, 0.9) * n;
    const double len = rng.uniform(0.4, 0.8) * n;
    const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double thickness = rng.bernoulli(0.5) ? 1.0 : 2.0;
    layout.wakes.push_back(Wake{x0, y0, x0 + len * std::cos(dir), y0 + len * std::sin(dir), thickness});
  }
  return layout;
}

CleanScene render_clean(const SceneLayout& layout, const SceneSpec& spec) {
  const std::size_t n = spec.size;
  const Shape shape{1, 1, n, n};
  CleanScene scene{Tensor(shape), Tensor(shape), Tensor(shape), Tensor(shape)};
  double amp_sum = 0.0;
  for (const Swell& s : layout.swells) amp_sum += s.amplitude;
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double px = static_cast<double>(x) + 0.5;
      const double py = static_cast<double>(y) + 0.5;
      double wave = 0.0;
      for (const Swell& s : layout.swells) {
        wave += s.amplitude *
                std::sin(2.0 * std::numbers::pi * (s.fx * px + s.fy * py) / static_cast<double>(n) + s.phase);
      }
      const double field = 1.0 + kFieldSwing * (amp_sum > 0.0 ? wave / amp_sum : 0.0);
      const double bg = spec.background_level * field;
      const bool in_slick =
          std::any_of(layout.slicks.begin(), layout.slicks.end(), [&](const Ellipse& e) { return e.contains(px, py); });
      // Wakes only darken open water; slick pixels keep a single darkening factor.
      const bool in_wake = !in_slick && std::any_of(layout.wakes.begin(), layout.wakes.end(),
                                                    [&](const Wake& w) { return w.contains(px, py); });
      const std::size_t i = y * n + x;
      scene.background[i] = bg;
      scene.mask[i] = in_slick ? 1.0 : 0.0;
      scene.wake_mask[i] = in_wake ? 1.0 : 0.0;
      scene.intensity[i] = in_slick ? bg * spec.slick_darkening : in_wake ? bg * spec.wake_darkening : bg;
    }
  }
  return scene;
}

Tensor apply_speckle(const Tensor& clean, std::size_t looks, Rng& rng) {
  Tensor out = clean;
  const double shape = static_cast<double>(looks);
  for (double& v : out.values()) v *= rng.gamma(shape, 1.0 / shape);
  return out;
}

SyntheticScene synth_scene(const SceneSpec& spec, Rng& rng) {
  SyntheticScene scene;
  scene.layout = sample_layout(spec, rng);
  CleanScene clean = render_clean(scene.layout, spec);
  scene.image = apply_speckle(clean.intensity, spec.speckle_looks, rng);
  for (double& v : scene.image.values()) v = std::clamp(v, 0.0, 1.0);
  scene.mask = std::move(clean.mask);
  return scene;
}

SyntheticScene synth_scene_at(const SceneSpec& spec, std::uint64_t index) {
  Rng rng(derive_seed(spec.seed, kSceneStream, index));
  return synth_scene(spec, rng);
}

}  // namespace dsf
