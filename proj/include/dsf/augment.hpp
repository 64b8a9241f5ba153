#pragma once

#include <utility>

#include "dsf/rng.hpp"
#include "dsf/tensor.hpp"

namespace dsf {

struct AugmentationConfig {
  bool rotate_90s = true;
  double hflip_p = 0.5;
  double vflip_p = 0.5;
  double contrast_lo = 0.9;
  double contrast_hi = 1.1;

  void validate() const;
  /// Every transform off.
  static AugmentationConfig identity();
};

/// One sampled transform: rotate by quarter_turns * 90 degrees counter-clockwise,
/// then mirror horizontally / vertically; contrast scales the image only.
struct AugmentRecord {
  int quarter_turns = 0;
  bool hflip = false;
  bool vflip = false;
  double contrast = 1.0;
};

AugmentRecord sample_augment(const AugmentationConfig& cfg, Rng& rng);

/// Geometric part of the record, applied to every plane.
Tensor apply_geometry(const Tensor& t, const AugmentRecord& rec);

/// Shared geometry for image and mask; contrast (then clamp to [0, 1]) on the image.
std::pair<Tensor, Tensor> augment(const Tensor& image, const Tensor& mask, const AugmentationConfig& cfg, Rng& rng,
                                  AugmentRecord* record = nullptr);

}  // namespace dsf
