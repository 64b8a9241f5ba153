#include "dsf/augment.hpp"

#include <algorithm>

#include "dsf/errors.hpp"

namespace dsf {
namespace {

Tensor rotate90(const Tensor& t) {
  const Shape& s = t.shape();
  Tensor out(Shape{s.n, s.c, s.w, s.h});
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const double* in = t.plane(b, c);
      double* dst = out.plane(b, c);
      // counter-clockwise: out(y, x) = in(x, w - 1 - y)
      for (std::size_t y = 0; y < s.w; ++y) {
        for (std::size_t x = 0; x < s.h; ++x) dst[y * s.h + x] = in[x * s.w + (s.w - 1 - y)];
      }
    }
  }
  return out;
}

Tensor mirror(const Tensor& t, bool horizontal) {
  const Shape& s = t.shape();
  Tensor out(s);
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const double* in = t.plane(b, c);
      double* dst = out.plane(b, c);
      for (std::size_t y = 0; y < s.h; ++y) {
        for (std::size_t x = 0; x < s.w; ++x) {
          dst[y * s.w + x] = horizontal ? in[y * s.w + (s.w - 1 - x)] : in[(s.h - 1 - y) * s.w + x];
        }
      }
    }
  }
  return out;
}

}  // namespace

void AugmentationConfig::validate() const {
  if (!(hflip_p >= 0.0 && hflip_p <= 1.0) || !(vflip_p >= 0.0 && vflip_p <= 1.0)) {
    throw ConfigError("data.augmentation flip probabilities must lie in [0, 1]");
  }
  if (!(contrast_lo > 0.0 && contrast_lo <= contrast_hi)) {
    throw ConfigError("data.augmentation.contrast_range must satisfy 0 < lo <= hi");
  }
}

AugmentationConfig AugmentationConfig::identity() { return AugmentationConfig{false, 0.0, 0.0, 1.0, 1.0}; }

AugmentRecord sample_augment(const AugmentationConfig& cfg, Rng& rng) {
  AugmentRecord rec;
  rec.quarter_turns = cfg.rotate_90s ? static_cast<int>(rng.below(4)) : 0;
  rec.hflip = rng.bernoulli(cfg.hflip_p);
  rec.vflip = rng.bernoulli(cfg.vflip_p);
  rec.contrast = rng.uniform(cfg.contrast_lo, cfg.contrast_hi);
  return rec;
}

Tensor apply_geometry(const Tensor& t, const AugmentRecord& rec) {
  Tensor out = t;
  for (int k = 0; k < rec.quarter_turns % 4; ++k) out = rotate90(out);
  if (rec.hflip) out = mirror(out, true);
  if (rec.vflip) out = mirror(out, false);
  return out;
}

std::pair<Tensor, Tensor> augment(const Tensor& image, const Tensor& mask, const AugmentationConfig& cfg, Rng& rng,
                                  AugmentRecord* record) {
  if (image.h() != mask.h() || image.w() != mask.w()) {
    throw ShapeError("augment: image " + image.shape().str() + " and mask " + mask.shape().str() + " differ");
  }
  const AugmentRecord rec = sample_augment(cfg, rng);
  Tensor img = apply_geometry(image, rec);
  for (double& v : img.values()) v = std::clamp(v * rec.contrast, 0.0, 1.0);
  Tensor m = apply_geometry(mask, rec);
  if (record) *record = rec;
  return {std::move(img), std::move(m)};
}

}  // namespace dsf
