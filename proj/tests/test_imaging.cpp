#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "advwm/imaging.hpp"

using namespace advwm;

namespace {

// Straight transcription of the blend in floating point.
std::uint8_t reference_blend(int host, int wm, int mask, int alpha) {
  const double a_eff = alpha * mask / 255.0;
  return static_cast<std::uint8_t>(std::round((wm * a_eff + host * (255.0 - a_eff)) / 255.0));
}

RasterImage solid(int w, int h, int ch, std::uint8_t v) { return RasterImage(w, h, ch, v); }

WatermarkAsset solid_wm(int w, int h, std::uint8_t v, std::uint8_t mask = 255) {
  RasterImage img(w, h, 4, v);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y, 3) = mask;
  return WatermarkAsset(img);
}

RasterImage random_image(int w, int h, int ch, std::mt19937& rng) {
  RasterImage img(w, h, ch);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(d(rng));
  return img;
}

}  // namespace

TEST(RasterImage, RejectsBadShapes) {
  EXPECT_THROW(RasterImage(0, 4, 3), std::invalid_argument);
  EXPECT_THROW(RasterImage(4, 4, 2), std::invalid_argument);
  EXPECT_THROW(RasterImage(2, 2, 3, std::vector<std::uint8_t>(11)), std::invalid_argument);
  EXPECT_NO_THROW(RasterImage(2, 2, 3, std::vector<std::uint8_t>(12)));
}

TEST(WatermarkAsset, RgbSourceGetsOpaqueMask) {
  WatermarkAsset wm(solid(3, 2, 3, 7));
  EXPECT_EQ(wm.image().channels(), 4);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x) EXPECT_EQ(wm.mask(x, y), 255);
}

TEST(ComputeScale, WorkedExamples) {
  auto s = compute_scale(100, 50, 224, 224, 0.25);
  EXPECT_DOUBLE_EQ(s.eta, 0.56);
  EXPECT_EQ(s.width, 56);
  EXPECT_EQ(s.height, 28);

  s = compute_scale(224, 224, 224, 224, 1.0);
  EXPECT_DOUBLE_EQ(s.eta, 1.0);
  EXPECT_EQ(s.width, 224);
  EXPECT_EQ(s.height, 224);

  s = compute_scale(260, 100, 224, 224, 0.5);
  EXPECT_NEAR(s.eta, 112.0 / 260.0, 1e-12);
  EXPECT_EQ(s.width, 112);
  EXPECT_EQ(s.height, 43);
}

TEST(ComputeScale, Errors) {
  EXPECT_THROW(compute_scale(10, 10, 20, 20, 0.0), std::invalid_argument);
  EXPECT_THROW(compute_scale(10, 10, 20, 20, -1.0), std::invalid_argument);
  EXPECT_THROW(compute_scale(10, 10, 20, 20, 1.5), std::invalid_argument);
}

TEST(ComputeScale, FloorOfOnePixel) {
  const auto s = compute_scale(1000, 10, 100, 100, 0.1);
  EXPECT_EQ(s.width, 10);
  EXPECT_EQ(s.height, 1);
}

TEST(ScaleWatermark, EachSideWithinHalfPixelOfUniformScale) {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> dim(1, 300);
  std::uniform_real_distribution<double> sl(0.05, 1.0);
  for (int i = 0; i < 500; ++i) {
    const int w = dim(rng), h = dim(rng);
    const double f = sl(rng);
    ScaleSpec s;
    try {
      s = compute_scale(w, h, 224, 224, f);
    } catch (const std::invalid_argument&) {
      continue;
    }
    EXPECT_LE(std::abs(s.width - std::max(1.0, w * s.eta)), 0.5 + 1e-9) << w << "x" << h << " sl=" << f;
    EXPECT_LE(std::abs(s.height - std::max(1.0, h * s.eta)), 0.5 + 1e-9) << w << "x" << h << " sl=" << f;
    EXPECT_TRUE(s.width <= 224 && s.height <= 224);
  }
}

TEST(ScaleWatermark, IdentityAndMaskResampling) {
  std::mt19937 rng(1);
  WatermarkAsset wm(random_image(16, 8, 4, rng));
  EXPECT_EQ(scale_watermark(wm, 16, 16, 1.0), wm);

  const auto scaled = scale_watermark(solid_wm(100, 50, 30, 0), 224, 224, 0.25);
  EXPECT_EQ(scaled.width(), 56);
  EXPECT_EQ(scaled.height(), 28);
  for (int y = 0; y < 28; ++y)
    for (int x = 0; x < 56; ++x) {
      ASSERT_EQ(scaled.mask(x, y), 0);
      ASSERT_EQ(scaled.image().at(x, y, 0), 30);
    }
  EXPECT_THROW(scale_watermark(WatermarkAsset{}, 10, 10, 0.5), std::invalid_argument);
}

TEST(Composite, WorkedPixelExamples) {
  const auto host = solid(4, 4, 3, 100);
  const auto wm = solid_wm(2, 2, 200);
  EXPECT_EQ(composite(host, wm, {1, 1, 0}).at(1, 1, 0), 100);
  EXPECT_EQ(composite(host, wm, {1, 1, 255}).at(1, 1, 0), 200);
  EXPECT_EQ(composite(host, wm, {1, 1, 100}).at(1, 1, 0), 139);
  const auto out = composite(host, wm, {1, 1, 100});
  EXPECT_EQ(out.at(0, 0, 0), 100);
  EXPECT_EQ(out.at(3, 3, 2), 100);
}

TEST(Composite, OutOfBoundsPlacement) {
  const auto host = solid(8, 8, 3, 0);
  const auto wm = solid_wm(4, 4, 255);
  EXPECT_THROW(composite(host, wm, {5, 0, 100}), std::invalid_argument);
  EXPECT_THROW(composite(host, wm, {0, -1, 100}), std::invalid_argument);
  EXPECT_THROW(composite(host, wm, {0, 0, 256}), std::invalid_argument);
  EXPECT_NO_THROW(composite(host, wm, {4, 4, 100}));
}

TEST(Composite, HostAlphaUntouchedAndInputNotMutated) {
  std::mt19937 rng(9);
  const auto host = random_image(10, 10, 4, rng);
  const auto copy = host;
  const auto out = composite(host, WatermarkAsset(random_image(5, 5, 4, rng)), {2, 3, 180});
  EXPECT_EQ(host, copy);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) EXPECT_EQ(out.at(x, y, 3), host.at(x, y, 3));
}

// Random hosts, watermarks, masks and placements against the scalar formula;
// outside-rectangle pixels must equal the host.
TEST(Composite, MatchesScalarReferenceAndRegionPurity) {
  std::mt19937 rng(42);
  std::uniform_int_distribution<int> alpha(0, 255);
  std::size_t checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto host = random_image(20, 15, 3, rng);
    const WatermarkAsset wm(random_image(6, 5, 4, rng));
    std::uniform_int_distribution<int> pd(0, 14), qd(0, 10);
    const Placement at{pd(rng), qd(rng), alpha(rng)};
    const auto out = composite(host, wm, at);
    for (int y = 0; y < 15; ++y) {
      for (int x = 0; x < 20; ++x) {
        const bool inside = x >= at.p && x < at.p + 6 && y >= at.q && y < at.q + 5;
        for (int c = 0; c < 3; ++c) {
          if (inside) {
            const int wx = x - at.p, wy = y - at.q;
            ASSERT_EQ(out.at(x, y, c),
                      reference_blend(host.at(x, y, c), wm.image().at(wx, wy, c), wm.mask(wx, wy), at.alpha));
            ++checked;
          } else {
            ASSERT_EQ(out.at(x, y, c), host.at(x, y, c));
          }
        }
      }
    }
  }
  EXPECT_GE(checked, 1000u);
}

TEST(Composite, EndpointIdentitiesAndMonotonicity) {
  for (int h = 0; h < 256; h += 5) {
    for (int w = 0; w < 256; w += 7) {
      const auto host = solid(1, 1, 3, static_cast<std::uint8_t>(h));
      const auto wm = solid_wm(1, 1, static_cast<std::uint8_t>(w));
      EXPECT_EQ(composite(host, wm, {0, 0, 0}).at(0, 0, 0), h);
      EXPECT_EQ(composite(host, wm, {0, 0, 255}).at(0, 0, 0), w);
      EXPECT_EQ(composite(host, solid_wm(1, 1, static_cast<std::uint8_t>(w), 0), {0, 0, 200}).at(0, 0, 0), h);
      if (w > h) {
        int prev = -1;
        for (int a = 0; a <= 255; ++a) {
          const int v = composite(host, wm, {0, 0, a}).at(0, 0, 0);
          ASSERT_GE(v, prev);
          prev = v;
        }
      }
    }
  }
}
