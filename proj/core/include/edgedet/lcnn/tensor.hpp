#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace edgedet::lcnn {

/// Dense channels x height x width array, channel-major then row-major.
template <typename T>
class BasicTensor {
 public:
  BasicTensor() = default;
  BasicTensor(int channels, int height, int width, T fill = T{});
  BasicTensor(int channels, int height, int width, std::vector<T> data);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(height_) * width_; }

  T& at(int c, int y, int x) { return data_[(c * plane()) + static_cast<std::size_t>(y) * width_ + x]; }
  const T& at(int c, int y, int x) const {
    return data_[(c * plane()) + static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::span<T> channel(int c) { return std::span<T>(data_).subspan(c * plane(), plane()); }
  std::span<const T> channel(int c) const {
    return std::span<const T>(data_).subspan(c * plane(), plane());
  }

  bool same_shape(const BasicTensor& o) const {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }

  template <typename U>
  BasicTensor<U> cast() const {
    return BasicTensor<U>(channels_, height_, width_, std::vector<U>(data_.begin(), data_.end()));
  }

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace edgedet::lcnn
