#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dsf/tensor.hpp"

namespace dsf {

struct Gray8Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

/// Reads an 8-bit grayscale PNG or binary PGM (P5, maxval 255).
Gray8Image read_gray8(const std::filesystem::path& path);
/// Format chosen by extension: ".pgm" writes P5, anything else PNG.
void write_gray8(const std::filesystem::path& path, const Gray8Image& image);

/// Pixel v -> v / 255 as a (1, 1, h, w) tensor.
Tensor load_tile(const std::filesystem::path& path);
/// Inverse of load_tile: round(255 * clamp(v, 0, 1)) per pixel of a 1x1 plane.
void save_tile(const std::filesystem::path& path, const Tensor& tile);

Gray8Image to_gray8(const Tensor& tile);
Tensor from_gray8(const Gray8Image& image);

/// Binary mask as {0, 255}.
void save_mask(const std::filesystem::path& path, const Tensor& mask);

/// Bilinear resampling of a tile to target x target (half-pixel sampling).
Tensor resize_tile(const Tensor& tile, std::size_t target);

}  // namespace dsf
