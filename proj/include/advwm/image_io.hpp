#pragma once

// PNG (via libpng) and binary PPM (P6) reading/writing. Grayscale inputs are
// promoted to RGB; alpha is preserved when the source carries it.

#include <png.h>

#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "advwm/error.hpp"
#include "advwm/imaging.hpp"

namespace advwm {

namespace detail {

struct PngImage {
  png_image img{};
  PngImage() {
    img.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&img); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

inline RasterImage finish_png_read(PngImage& png, const std::string& what) {
  const bool has_alpha = (png.img.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  png.img.format = has_alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  const int channels = has_alpha ? 4 : 3;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png.img));
  if (!png_image_finish_read(&png.img, nullptr, buf.data(), 0, nullptr)) {
    throw IoError(what + ": " + png.img.message);
  }
  return RasterImage(static_cast<int>(png.img.width), static_cast<int>(png.img.height), channels,
                     std::move(buf));
}

inline png_image png_descriptor(const RasterImage& image) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = image.channels() == 4 ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  return img;
}

inline bool is_png(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), kSig, 8) == 0;
}

inline RasterImage decode_ppm(std::span<const std::uint8_t> bytes, const std::string& what) {
  std::size_t pos = 2;
  auto next_int = [&]() -> long {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    long v = 0;
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos]) && pos - start < 9) {
      v = v * 10 + (bytes[pos++] - '0');
    }
    if (pos == start) throw IoError(what + ": malformed PPM header");
    return v;
  };
  const long w = next_int();
  const long h = next_int();
  const long maxval = next_int();
  if (w < 1 || h < 1 || maxval != 255) throw IoError(what + ": unsupported PPM header");
  ++pos;  // single whitespace byte before the raster
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (pos > bytes.size() || bytes.size() - pos < need) throw IoError(what + ": truncated PPM data");
  return RasterImage(static_cast<int>(w), static_cast<int>(h), 3,
                     std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                               bytes.begin() + static_cast<std::ptrdiff_t>(pos + need)));
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace detail

/// Decodes PNG or PPM bytes. `what` names the source in error messages.
inline RasterImage decode_image(std::span<const std::uint8_t> bytes,
                                const std::string& what = "<memory>") {
  if (detail::is_png(bytes)) {
    detail::PngImage png;
    if (!png_image_begin_read_from_memory(&png.img, bytes.data(), bytes.size())) {
      throw IoError(what + ": " + png.img.message);
    }
    return detail::finish_png_read(png, what);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
    return detail::decode_ppm(bytes, what);
  }
  throw IoError(what + ": unrecognised image format");
}

inline std::vector<std::uint8_t> encode_png(const RasterImage& image) {
  png_image img = detail::png_descriptor(image);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.pixels().data(), 0, nullptr)) {
    throw IoError(std::string("PNG encode: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.pixels().data(), 0, nullptr)) {
    throw IoError(std::string("PNG encode: ") + img.message);
  }
  out.resize(size);
  return out;
}

inline RasterImage load_image(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return decode_image(bytes, path.string());
}

/// Format follows the extension: `.ppm` writes P6 (alpha dropped), anything
/// else writes PNG.
inline void save_image(const RasterImage& image, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  if (path.extension() == ".ppm") {
    const std::string header = "P6\n" + std::to_string(image.width()) + " " +
                               std::to_string(image.height()) + "\n255\n";
    bytes.assign(header.begin(), header.end());
    for (int y = 0; y < image.height(); ++y) {
      for (int x = 0; x < image.width(); ++x) {
        for (int c = 0; c < 3; ++c) bytes.push_back(image.at(x, y, c));
      }
    }
  } else {
    bytes = encode_png(image);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path.string() + ": write failed");
}

inline WatermarkAsset load_watermark(const std::filesystem::path& path) {
  return WatermarkAsset(load_image(path));
}

}  // namespace advwm
