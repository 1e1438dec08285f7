#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "edgedet/geometry.hpp"

namespace edgedet {

/// Row-major, channel-interleaved pixel grid. Intensities live in [0, 255]
/// but are kept as floats so intermediate images (resized, synthetic) share
/// the same type.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels);
  Image(int width, int height, int channels, std::vector<float> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return pixels_.empty(); }

  float at(int x, int y, int c = 0) const {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  float& at(int x, int y, int c = 0) {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<const float> pixels() const { return pixels_; }
  std::span<float> pixels() { return pixels_; }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> pixels_;
};

/// Summed-area table with a zero top row and left column, so entry (x, y)
/// holds the sum over [0, x) x [0, y).
class IntegralImage {
 public:
  IntegralImage() = default;
  explicit IntegralImage(const Image& gray);

  /// Width and height of the source image (the table is one larger).
  int width() const { return width_; }
  int height() const { return height_; }

  double at(int x, int y) const {
    return table_[static_cast<std::size_t>(y) * (width_ + 1) + x];
  }

  /// Sum over [x, x + w) x [y, y + h); integer coordinates only.
  double sum(int x, int y, int w, int h) const {
    return at(x + w, y + h) - at(x, y + h) - at(x + w, y) + at(x, y);
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> table_;
};

struct PyramidLevel {
  Image image;
  double scale = 1.0;  // original width / this level's width
};

/// Reads binary PGM (P5) or PPM (P6) with maxval 255.
Image load_image(const std::filesystem::path& path);
Image decode_netpbm(std::span<const unsigned char> bytes);

/// Writes P5 for one channel, P6 for three. Values are rounded and clamped.
void save_image(const Image& img, const std::filesystem::path& path);
std::vector<unsigned char> encode_netpbm(const Image& img);

/// BT.601 luma for RGB; single-channel input is returned unchanged.
Image to_grayscale(const Image& img);

/// Replicates a gray channel into three; RGB input is returned unchanged.
Image to_rgb(const Image& img);

IntegralImage integral(const Image& img);

/// Throws BoundsError unless the box is integral and inside the table.
double rect_sum(const IntegralImage& ii, const BoundingBox& box);

/// Nearest-neighbour resampling.
Image resize_nearest(const Image& img, int width, int height);

Image crop(const Image& img, int x, int y, int w, int h);

/// Level k is img subsampled to floor(side / scale_factor^k); the original
/// is always level 0 and iteration stops once a side drops below min_side.
std::vector<PyramidLevel> build_pyramid(const Image& img, double scale_factor, int min_side);

/// Draws a 1-px rectangle outline, clipped to the image.
void draw_box(Image& img, const BoundingBox& box, std::span<const float> color);

}  // namespace edgedet
