#include "dsf/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "dsf/errors.hpp"
#include "dsf/ops.hpp"

namespace dsf {
namespace {

bool has_png_signature(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

Gray8Image read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("cannot read PNG '" + path.string() + "': " + image.message);
  }
  if ((image.format & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_ALPHA | PNG_FORMAT_FLAG_LINEAR)) != 0) {
    png_image_free(&image);
    throw DataError("'" + path.string() + "' is not an 8-bit grayscale PNG");
  }
  image.format = PNG_FORMAT_GRAY;
  Gray8Image out{image.height, image.width, std::vector<std::uint8_t>(PNG_IMAGE_SIZE(image))};
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    throw DataError("cannot decode PNG '" + path.string() + "': " + image.message);
  }
  return out;
}

std::string next_pgm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

Gray8Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  if (next_pgm_token(in) != "P5") throw DataError("'" + path.string() + "' is not a PNG or binary PGM (P5)");
  Gray8Image img;
  try {
    img.width = std::stoul(next_pgm_token(in));
    img.height = std::stoul(next_pgm_token(in));
    if (std::stoul(next_pgm_token(in)) != 255) throw DataError("'" + path.string() + "' is not an 8-bit PGM");
  } catch (const std::logic_error&) {
    throw DataError("'" + path.string() + "' has a malformed PGM header");
  }
  img.pixels.resize(img.width * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) {
    throw DataError("'" + path.string() + "' is truncated");
  }
  return img;
}

std::string lower_ext(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

Gray8Image read_gray8(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw DataError("image file '" + path.string() + "' does not exist");
  return has_png_signature(path) ? read_png(path) : read_pgm(path);
}

void write_gray8(const std::filesystem::path& path, const Gray8Image& img) {
  if (img.pixels.size() != img.width * img.height) throw DataError("write_gray8: pixel count mismatch");
  if (lower_ext(path) == ".pgm") {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    return;
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels.data(), 0, nullptr)) {
    throw DataError("cannot write PNG '" + path.string() + "': " + image.message);
  }
}

Gray8Image to_gray8(const Tensor& tile) {
  if (tile.n() != 1 || tile.c() != 1) throw ShapeError("to_gray8: expects a (1,1,h,w) tile, got " + tile.shape().str());
  Gray8Image img{tile.h(), tile.w(), std::vector<std::uint8_t>(tile.size())};
  for (std::size_t i = 0; i < tile.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(tile[i], 0.0, 1.0)));
  }
  return img;
}

Tensor from_gray8(const Gray8Image& img) {
  Tensor t(Shape{1, 1, img.height, img.width});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(img.pixels[i]) / 255.0;
  return t;
}

Tensor load_tile(const std::filesystem::path& path) { return from_gray8(read_gray8(path)); }

void save_tile(const std::filesystem::path& path, const Tensor& tile) { write_gray8(path, to_gray8(tile)); }

void save_mask(const std::filesystem::path& path, const Tensor& mask) {
  Gray8Image img = to_gray8(mask);
  for (auto& p : img.pixels) p = p >= 128 ? 255 : 0;
  write_gray8(path, img);
}

Tensor resize_tile(const Tensor& tile, std::size_t target) {
  if (target < 8) throw ShapeError("resize_tile: target size must be >= 8");
  if (tile.h() == target && tile.w() == target) return tile;
  return resize_bilinear(tile, target, target);
}

}  // namespace dsf
