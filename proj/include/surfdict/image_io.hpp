#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace surfdict {

/// Row-major grayscale raster with intensities in [0, 1].
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::vector<double> pixels);
  GrayImage(int width, int height, double fill = 0.0);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  const std::vector<double>& pixels() const noexcept { return pixels_; }

  double at(int x, int y) const { return pixels_[index(x, y)]; }
  double& at(int x, int y) { return pixels_[index(x, y)]; }

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

/// Summed-area table. Entry (x, y) holds the sum of all intensities with
/// x' <= x and y' <= y.
class IntegralImage {
 public:
  IntegralImage() = default;
  explicit IntegralImage(const GrayImage& img);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  const std::vector<double>& table() const noexcept { return table_; }

  double at(int x, int y) const {
    return table_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                  static_cast<std::size_t>(x)];
  }

  /// Sum over the inclusive rectangle [x0, x1] x [y0, y1]. Corners are
  /// clamped to the image before evaluation.
  double box_sum(int x0, int y0, int x1, int y1) const;

  /// Sum over the inclusive rectangle as if the image were extended by
  /// replicating its border pixels. Equals box_sum() for boxes that lie
  /// inside the image. Used by every box filter.
  double padded_box_sum(int x0, int y0, int x1, int y1) const;

 private:
  // Table lookup with the convention that index -1 reads as zero.
  double cum(int x, int y) const {
    if (x < 0 || y < 0) return 0.0;
    return at(x, y);
  }
  double inner_sum(int x0, int y0, int x1, int y1) const {
    return cum(x1, y1) - cum(x0 - 1, y1) - cum(x1, y0 - 1) + cum(x0 - 1, y0 - 1);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> table_;
};

/// Reads a binary PGM (P5, maxval 255). Throws surfdict::Error with kinds
/// kMissingFile, kMalformedHeader, kUnsupportedMaxval or kTruncated.
GrayImage load_pgm(const std::filesystem::path& path);

/// Writes a binary PGM, quantizing intensities to 8 bits.
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

IntegralImage build_integral(const GrayImage& img);

}  // namespace surfdict
