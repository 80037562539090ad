#pragma once

// Raster images, watermark scaling and alpha-blend compositing.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace advwm {

/// Row-major 8-bit raster with 3 (RGB) or 4 (RGBA) interleaved channels.
class RasterImage {
 public:
  RasterImage() = default;

  RasterImage(int width, int height, int channels, std::uint8_t fill = 0)
      : RasterImage(width, height, channels,
                    std::vector<std::uint8_t>(checked_size(width, height, channels), fill)) {}

  RasterImage(int width, int height, int channels, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
    if (pixels_.size() != checked_size(width, height, channels)) {
      throw std::invalid_argument("RasterImage: buffer length " + std::to_string(pixels_.size()) +
                                  " does not match " + std::to_string(width) + "x" +
                                  std::to_string(height) + "x" + std::to_string(channels));
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
           static_cast<std::size_t>(channels_);
  }

  std::uint8_t at(int x, int y, int c) const noexcept { return pixels_[offset(x, y) + c]; }
  std::uint8_t& at(int x, int y, int c) noexcept { return pixels_[offset(x, y) + c]; }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  static std::size_t checked_size(int width, int height, int channels) {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("RasterImage: dimensions must be positive");
    }
    if (channels != 3 && channels != 4) {
      throw std::invalid_argument("RasterImage: channels must be 3 or 4, got " +
                                  std::to_string(channels));
    }
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(channels);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// RGBA watermark. The alpha channel is the per-pixel opacity mask.
class WatermarkAsset {
 public:
  WatermarkAsset() = default;

  /// RGB sources get an all-opaque mask.
  explicit WatermarkAsset(const RasterImage& source) : image_(to_rgba(source)) {}

  const RasterImage& image() const noexcept { return image_; }
  int width() const noexcept { return image_.width(); }
  int height() const noexcept { return image_.height(); }
  bool empty() const noexcept { return image_.empty(); }

  std::uint8_t mask(int x, int y) const noexcept { return image_.at(x, y, 3); }

  friend bool operator==(const WatermarkAsset&, const WatermarkAsset&) = default;

 private:
  static RasterImage to_rgba(const RasterImage& src) {
    if (src.channels() == 4) return src;
    RasterImage out(src.width(), src.height(), 4, 255);
    for (int y = 0; y < src.height(); ++y) {
      for (int x = 0; x < src.width(); ++x) {
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = src.at(x, y, c);
      }
    }
    return out;
  }

  RasterImage image_;
};

/// Position (top-left corner) and global transparency of an embedded watermark.
struct Placement {
  int p = 0;      // horizontal offset
  int q = 0;      // vertical offset
  int alpha = 0;  // 0 = invisible, 255 = opaque

  friend bool operator==(const Placement&, const Placement&) = default;
  friend auto operator<=>(const Placement&, const Placement&) = default;
};

/// Outcome of the scale-factor computation for a watermark on a host.
struct ScaleSpec {
  double factor = 1.0;  // sl
  double eta = 1.0;     // applied resize ratio
  int width = 0;        // scaled watermark width
  int height = 0;       // scaled watermark height
};

namespace detail {

// Round half away from zero, then saturate into [0,255].
inline std::uint8_t to_u8(double v) noexcept {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

}  // namespace detail

/// Resize ratio eta = min(host_w*sl/w, host_h*sl/h); the scaled dimensions are
/// rounded to nearest with a floor of one pixel.
inline ScaleSpec compute_scale(int wm_w, int wm_h, int host_w, int host_h, double sl) {
  if (!(sl > 0.0) || !std::isfinite(sl)) {
    throw std::invalid_argument("scale factor must be positive, got " + std::to_string(sl));
  }
  if (wm_w < 1 || wm_h < 1 || host_w < 1 || host_h < 1) {
    throw std::invalid_argument("compute_scale: empty watermark or host");
  }
  ScaleSpec s;
  s.factor = sl;
  s.eta = std::min((host_w * sl) / wm_w, (host_h * sl) / wm_h);
  s.width = std::max(1, static_cast<int>(std::round(wm_w * s.eta)));
  s.height = std::max(1, static_cast<int>(std::round(wm_h * s.eta)));
  if (s.width > host_w || s.height > host_h) {
    throw std::invalid_argument("scaled watermark " + std::to_string(s.width) + "x" +
                                std::to_string(s.height) + " exceeds host " +
                                std::to_string(host_w) + "x" + std::to_string(host_h));
  }
  return s;
}

/// Bilinear resample with pixel-center alignment; every channel (mask included)
/// is filtered identically.
inline RasterImage resize_bilinear(const RasterImage& src, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw std::invalid_argument("resize_bilinear: empty target");
  if (out_w == src.width() && out_h == src.height()) return src;

  RasterImage out(out_w, out_h, src.channels());
  const double sx = static_cast<double>(src.width()) / out_w;
  const double sy = static_cast<double>(src.height()) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < src.channels(); ++c) {
        const double top = src.at(x0, y0, c) * (1.0 - wx) + src.at(x1, y0, c) * wx;
        const double bot = src.at(x0, y1, c) * (1.0 - wx) + src.at(x1, y1, c) * wx;
        out.at(x, y, c) = detail::to_u8(top * (1.0 - wy) + bot * wy);
      }
    }
  }
  return out;
}

inline WatermarkAsset scale_watermark(const WatermarkAsset& asset, int host_w, int host_h,
                                      double sl) {
  if (asset.empty()) throw std::invalid_argument("scale_watermark: empty asset");
  const ScaleSpec s = compute_scale(asset.width(), asset.height(), host_w, host_h, sl);
  return WatermarkAsset(resize_bilinear(asset.image(), s.width, s.height));
}

/// Blends `wm` into a copy of `host` with its top-left corner at (p, q).
///
/// Each colour channel inside the rectangle becomes
///   round((W * a + H * (255 - a)) / 255),  a = alpha * mask / 255,
/// evaluated in exact integer arithmetic. Pixels outside the rectangle and any
/// host alpha channel are copied unchanged.
inline RasterImage composite(const RasterImage& host, const WatermarkAsset& wm,
                             const Placement& at) {
  if (host.empty() || wm.empty()) throw std::invalid_argument("composite: empty input");
  if (at.p < 0 || at.q < 0 || at.p > host.width() - wm.width() ||
      at.q > host.height() - wm.height()) {
    throw std::invalid_argument("composite: placement (" + std::to_string(at.p) + "," +
                                std::to_string(at.q) + ") puts " + std::to_string(wm.width()) +
                                "x" + std::to_string(wm.height()) + " watermark outside " +
                                std::to_string(host.width()) + "x" +
                                std::to_string(host.height()) + " host");
  }
  if (at.alpha < 0 || at.alpha > 255) {
    throw std::invalid_argument("composite: alpha must lie in [0,255], got " +
                                std::to_string(at.alpha));
  }

  constexpr std::uint32_t kFull = 255u * 255u;
  RasterImage out = host;
  const RasterImage& w = wm.image();
  for (int y = 0; y < wm.height(); ++y) {
    for (int x = 0; x < wm.width(); ++x) {
      const std::uint32_t a = static_cast<std::uint32_t>(at.alpha) * w.at(x, y, 3);
      if (a == 0) continue;
      for (int c = 0; c < 3; ++c) {
        const std::uint32_t num =
            w.at(x, y, c) * a + host.at(at.p + x, at.q + y, c) * (kFull - a);
        out.at(at.p + x, at.q + y, c) = static_cast<std::uint8_t>((num + kFull / 2) / kFull);
      }
    }
  }
  return out;
}

}  // namespace advwm
