#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "advwm/image_io.hpp"

using namespace advwm;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / "advwm_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

RasterImage random_image(int w, int h, int ch, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  RasterImage img(w, h, ch);
  for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(d(rng));
  return img;
}

}  // namespace

TEST(ImageIo, PngRoundTripIsLossless) {
  for (int ch : {3, 4}) {
    const auto img = random_image(16, 16, ch, 5 + ch);
    const auto path = temp_path("rt" + std::to_string(ch) + ".png");
    save_image(img, path);
    EXPECT_EQ(load_image(path), img);
  }
}

TEST(ImageIo, PpmRoundTripIsLossless) {
  const auto img = random_image(7, 5, 3, 11);
  const auto path = temp_path("rt.ppm");
  save_image(img, path);
  EXPECT_EQ(load_image(path), img);
}

TEST(ImageIo, RgbFileWrapsToOpaqueWatermark) {
  const auto path = temp_path("rgb.png");
  save_image(random_image(4, 3, 3, 2), path);
  const auto img = load_image(path);
  EXPECT_EQ(img.channels(), 3);
  const auto wm = load_watermark(path);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x) EXPECT_EQ(wm.mask(x, y), 255);
}

TEST(ImageIo, GrayscalePngPromotedToRgb) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = 3;
  img.height = 2;
  img.format = PNG_FORMAT_GRAY;
  const std::uint8_t gray[6] = {0, 50, 100, 150, 200, 250};
  const auto path = temp_path("gray.png");
  ASSERT_TRUE(png_image_write_to_file(&img, path.c_str(), 0, gray, 0, nullptr));
  const auto loaded = load_image(path);
  ASSERT_EQ(loaded.channels(), 3);
  EXPECT_EQ(loaded.at(1, 0, 0), 50);
  EXPECT_EQ(loaded.at(1, 0, 2), 50);
  EXPECT_EQ(loaded.at(2, 1, 1), 250);
}

TEST(ImageIo, TruncatedFileFailsWithPath) {
  const auto good = temp_path("full.png");
  save_image(random_image(32, 32, 3, 3), good);
  std::ifstream in(good, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
  const auto bad = temp_path("truncated.png");
  {
    std::ofstream out(bad, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  try {
    load_image(bad);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated.png"), std::string::npos);
  }
  EXPECT_THROW(load_image(temp_path("does_not_exist.png")), IoError);

  const auto junk = temp_path("junk.png");
  std::ofstream(junk) << "not an image";
  EXPECT_THROW(load_image(junk), IoError);

  const auto short_ppm = temp_path("short.ppm");
  std::ofstream(short_ppm, std::ios::binary) << "P6\n4 4\n255\nabc";
  EXPECT_THROW(load_image(short_ppm), IoError);
}

TEST(ImageIo, EncodeDecodeInMemory) {
  const auto img = random_image(9, 4, 4, 8);
  EXPECT_EQ(decode_image(encode_png(img)), img);
}
