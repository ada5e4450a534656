#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "support/synthetic.hpp"
#include "surfdict/error.hpp"
#include "surfdict/image_io.hpp"

namespace fs = std::filesystem;
using namespace surfdict;

namespace {

fs::path write_file(const std::string& name, const std::string& bytes) {
  const fs::path p = fs::temp_directory_path() / ("surfdict_io_" + name);
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  return p;
}

ErrorKind kind_of(const fs::path& p) {
  try {
    load_pgm(p);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error for " << p;
  return ErrorKind::kIo;
}

GrayImage random_image(int w, int h, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> px(static_cast<std::size_t>(w * h));
  for (double& v : px) v = u(rng);
  return GrayImage(w, h, std::move(px));
}

}  // namespace

TEST(LoadPgm, MapsBytesToUnitInterval) {
  const fs::path p = write_file("2x2.pgm", std::string("P5\n2 2\n255\n") + std::string("\x00\xff\xff\x00", 4));
  const GrayImage img = load_pgm(p);
  ASSERT_EQ(img.width(), 2);
  ASSERT_EQ(img.height(), 2);
  EXPECT_EQ(img.pixels(), (std::vector<double>{0.0, 1.0, 1.0, 0.0}));
}

TEST(LoadPgm, ToleratesCommentsInHeader) {
  const fs::path p = write_file("comment.pgm", std::string("P5 # made by hand\n# another\n2 1 255\n") + "\x80\x40");
  const GrayImage img = load_pgm(p);
  EXPECT_DOUBLE_EQ(img.at(0, 0), 128 / 255.0);
  EXPECT_DOUBLE_EQ(img.at(1, 0), 64 / 255.0);
}

TEST(LoadPgm, ErrorKindsAreDistinct) {
  EXPECT_EQ(kind_of(fs::temp_directory_path() / "surfdict_io_does_not_exist.pgm"), ErrorKind::kMissingFile);
  EXPECT_EQ(kind_of(write_file("short.pgm", "P5\n4 4\n255\n" + std::string(15, '\x10'))), ErrorKind::kTruncated);
  EXPECT_EQ(kind_of(write_file("color.pgm", "P6\n1 1\n255\n" + std::string(3, '\x10'))),
            ErrorKind::kMalformedHeader);
  EXPECT_EQ(kind_of(write_file("maxval.pgm", "P5\n1 1\n65535\n" + std::string(2, '\x10'))),
            ErrorKind::kUnsupportedMaxval);
  EXPECT_EQ(kind_of(write_file("garbage.pgm", "P5\nfour 4\n255\n")), ErrorKind::kMalformedHeader);
}

TEST(LoadPgm, SaveThenLoadPreservesQuantizedImage) {
  const GrayImage img = synth::scene_image(40, 30, 7);
  const fs::path p = fs::temp_directory_path() / "surfdict_io_roundtrip.pgm";
  save_pgm(img, p);
  EXPECT_EQ(load_pgm(p).pixels(), img.pixels());
}

TEST(BuildIntegral, ZeroImageGivesZeroTable) {
  const IntegralImage ii = build_integral(GrayImage(3, 3, 0.0));
  for (double v : ii.table()) EXPECT_EQ(v, 0.0);
}

TEST(BuildIntegral, OnesGiveAnalyticCumulativeSum) {
  const IntegralImage ii = build_integral(GrayImage(2, 2, 1.0));
  EXPECT_EQ(ii.table(), (std::vector<double>{1, 2, 2, 4}));
}

TEST(BuildIntegral, MatchesDoubleLoopRecomputation) {
  const GrayImage img = random_image(5, 5, 11);
  const IntegralImage ii = build_integral(img);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) {
      EXPECT_NEAR(ii.at(x, y), synth::brute_rect_sum(img, 0, 0, x, y), 1e-12);
    }
  }
  // Monotone along rows and columns; last entry is the total.
  for (int y = 0; y < 5; ++y) {
    for (int x = 1; x < 5; ++x) EXPECT_GE(ii.at(x, y), ii.at(x - 1, y));
  }
  EXPECT_NEAR(ii.at(4, 4), synth::brute_rect_sum(img, 0, 0, 4, 4), 1e-12);
}

TEST(BoxSum, FullAndSinglePixel) {
  const IntegralImage ones = build_integral(GrayImage(2, 2, 1.0));
  EXPECT_EQ(ones.box_sum(0, 0, 1, 1), 4.0);
  const GrayImage img = random_image(6, 4, 3);
  const IntegralImage ii = build_integral(img);
  EXPECT_NEAR(ii.box_sum(3, 2, 3, 2), img.at(3, 2), 1e-12);
}

TEST(BoxSum, RandomRectanglesMatchBruteForce) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const GrayImage img = random_image(8, 8, static_cast<std::uint32_t>(trial));
    const IntegralImage ii = build_integral(img);
    std::uniform_int_distribution<int> c(0, 7);
    int x0 = c(rng), x1 = c(rng), y0 = c(rng), y1 = c(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    const double want = synth::brute_rect_sum(img, x0, y0, x1, y1);
    EXPECT_NEAR(ii.box_sum(x0, y0, x1, y1), want, 1e-9 * std::max(1.0, want));
  }
}

TEST(BoxSum, ClampsOutOfRangeCorners) {
  const GrayImage img = random_image(5, 5, 9);
  const IntegralImage ii = build_integral(img);
  EXPECT_NEAR(ii.box_sum(-3, -3, 10, 10), synth::brute_rect_sum(img, 0, 0, 4, 4), 1e-12);
  EXPECT_NEAR(ii.box_sum(-2, 1, 2, 9), synth::brute_rect_sum(img, 0, 1, 2, 4), 1e-12);
}

TEST(PaddedBoxSum, MatchesReplicatedBorderOracle) {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> c(-12, 18);
  for (int trial = 0; trial < 300; ++trial) {
    const int w = 1 + trial % 7;
    const int h = 1 + (trial / 7) % 6;
    const GrayImage img = random_image(w, h, static_cast<std::uint32_t>(100 + trial));
    const IntegralImage ii = build_integral(img);
    int x0 = c(rng), x1 = c(rng), y0 = c(rng), y1 = c(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    const double want = synth::brute_padded_sum(img, x0, y0, x1, y1);
    EXPECT_NEAR(ii.padded_box_sum(x0, y0, x1, y1), want, 1e-9 * std::max(1.0, want))
        << w << "x" << h << " [" << x0 << "," << x1 << "]x[" << y0 << "," << y1 << "]";
  }
}

TEST(GrayImage, RejectsInvalidConstruction) {
  EXPECT_THROW(GrayImage(0, 3, 0.0), Error);
  EXPECT_THROW(GrayImage(2, 2, std::vector<double>{0, 0, 0}), Error);
  EXPECT_THROW(GrayImage(1, 1, std::vector<double>{1.5}), Error);
}
