#include "edgedet/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "edgedet/errors.hpp"

namespace edgedet {

Image::Image(int width, int height, int channels)
    : Image(width, height, channels,
            std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) *
                               std::max(height, 0) * std::max(channels, 0))) {}

Image::Image(int width, int height, int channels, std::vector<float> pixels)
    : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) throw ConfigError("image dimensions must be positive");
  if (channels != 1 && channels != 3) throw ChannelError("image must have 1 or 3 channels");
  if (pixels_.size() != static_cast<std::size_t>(width) * height * channels)
    throw ShapeError("pixel buffer does not match image dimensions");
}

IntegralImage::IntegralImage(const Image& gray) : width_(gray.width()), height_(gray.height()) {
  if (gray.channels() != 1) throw ChannelError("integral image needs a single-channel image");
  const std::size_t stride = static_cast<std::size_t>(width_) + 1;
  table_.assign(stride * (height_ + 1), 0.0);
  for (int y = 0; y < height_; ++y) {
    double row = 0.0;
    for (int x = 0; x < width_; ++x) {
      row += gray.at(x, y);
      table_[(y + 1) * stride + x + 1] = table_[y * stride + x + 1] + row;
    }
  }
}

namespace {

// Netpbm header tokens are separated by whitespace and may be interleaved
// with '#' comments running to end of line.
class HeaderReader {
 public:
  explicit HeaderReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  std::string token() {
    skip_space_and_comments();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#')
      out.push_back(static_cast<char>(bytes_[pos_++]));
    if (out.empty()) throw FormatError("truncated netpbm header");
    return out;
  }

  int integer() {
    const std::string t = token();
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      throw FormatError("netpbm header field is not a number: " + t);
    if (t.size() > 9) throw FormatError("netpbm header value too large");
    return std::stoi(t);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw FormatError("missing separator before netpbm raster");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image decode_netpbm(std::span<const unsigned char> bytes) {
  HeaderReader reader(bytes);
  const std::string magic = reader.token();
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw FormatError("unsupported netpbm magic '" + magic + "'");
  }
  const int width = reader.integer();
  const int height = reader.integer();
  const int maxval = reader.integer();
  if (width < 1 || height < 1) throw FormatError("netpbm dimensions must be positive");
  if (maxval != 255) throw FormatError("only maxval 255 is supported");

  const std::size_t offset = reader.raster_offset();
  const std::size_t expected = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() < offset + expected) throw FormatError("truncated netpbm raster");

  std::vector<float> pixels(expected);
  std::transform(bytes.begin() + offset, bytes.begin() + offset + expected, pixels.begin(),
                 [](unsigned char b) { return static_cast<float>(b); });
  return Image(width, height, channels, std::move(pixels));
}

Image load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open image " + path.string());
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                         std::istreambuf_iterator<char>()};
  return decode_netpbm(bytes);
}

std::vector<unsigned char> encode_netpbm(const Image& img) {
  const std::string header = std::string(img.channels() == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(img.width()) + " " + std::to_string(img.height()) +
                             "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  out.reserve(out.size() + img.pixels().size());
  for (float v : img.pixels())
    out.push_back(static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L)));
  return out;
}

void save_image(const Image& img, const std::filesystem::path& path) {
  const auto bytes = encode_netpbm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write image " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Image to_grayscale(const Image& img) {
  if (img.channels() == 1) return img;
  Image out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      out.at(x, y) = static_cast<float>(0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
                                        0.114 * img.at(x, y, 2));
  return out;
}

Image to_rgb(const Image& img) {
  if (img.channels() == 3) return img;
  Image out(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y);
  return out;
}

IntegralImage integral(const Image& img) { return IntegralImage(img); }

double rect_sum(const IntegralImage& ii, const BoundingBox& box) {
  const double xs[] = {box.x, box.y, box.w, box.h};
  for (double v : xs)
    if (v != std::floor(v)) throw BoundsError("rect_sum needs integer box coordinates");
  const int x = static_cast<int>(box.x), y = static_cast<int>(box.y);
  const int w = static_cast<int>(box.w), h = static_cast<int>(box.h);
  if (x < 0 || y < 0 || w < 0 || h < 0 || x + w > ii.width() || y + h > ii.height())
    throw BoundsError("rectangle outside integral image");
  return ii.sum(x, y, w, h);
}

Image resize_nearest(const Image& img, int width, int height) {
  Image out(width, height, img.channels());
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    const int src_y = std::min(img.height() - 1, static_cast<int>(std::floor(y * sy)));
    for (int x = 0; x < width; ++x) {
      const int src_x = std::min(img.width() - 1, static_cast<int>(std::floor(x * sx)));
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(src_x, src_y, c);
    }
  }
  return out;
}

Image crop(const Image& img, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > img.width() || y + h > img.height())
    throw BoundsError("crop rectangle outside image");
  Image out(w, h, img.channels());
  for (int yy = 0; yy < h; ++yy)
    for (int xx = 0; xx < w; ++xx)
      for (int c = 0; c < img.channels(); ++c) out.at(xx, yy, c) = img.at(x + xx, y + yy, c);
  return out;
}

std::vector<PyramidLevel> build_pyramid(const Image& img, double scale_factor, int min_side) {
  if (!(scale_factor > 1.0)) throw ConfigError("pyramid scale factor must exceed 1");
  if (min_side < 8) throw ConfigError("pyramid min_side must be at least 8");

  std::vector<PyramidLevel> levels;
  levels.push_back({img, 1.0});
  for (int k = 1;; ++k) {
    const double s = std::pow(scale_factor, k);
    const int w = static_cast<int>(std::floor(img.width() / s));
    const int h = static_cast<int>(std::floor(img.height() / s));
    if (w < min_side || h < min_side) break;
    const Image& prev = levels.back().image;
    if (w == prev.width() && h == prev.height()) continue;
    levels.push_back({resize_nearest(img, w, h), static_cast<double>(img.width()) / w});
  }
  return levels;
}

void draw_box(Image& img, const BoundingBox& box, std::span<const float> color) {
  const int x0 = std::clamp(static_cast<int>(std::lround(box.x)), 0, img.width() - 1);
  const int y0 = std::clamp(static_cast<int>(std::lround(box.y)), 0, img.height() - 1);
  const int x1 = std::clamp(static_cast<int>(std::lround(box.right())) - 1, 0, img.width() - 1);
  const int y1 = std::clamp(static_cast<int>(std::lround(box.bottom())) - 1, 0, img.height() - 1);
  auto paint = [&](int x, int y) {
    for (int c = 0; c < img.channels(); ++c)
      img.at(x, y, c) = color[std::min<std::size_t>(c, color.size() - 1)];
  };
  for (int x = x0; x <= x1; ++x) {
    paint(x, y0);
    paint(x, y1);
  }
  for (int y = y0; y <= y1; ++y) {
    paint(x0, y);
    paint(x1, y);
  }
}

}  // namespace edgedet
