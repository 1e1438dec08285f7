#include "edgedet/lcnn/tensor.hpp"

#include "edgedet/errors.hpp"

namespace edgedet::lcnn {

template <typename T>
BasicTensor<T>::BasicTensor(int channels, int height, int width, T fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 1 || height < 1 || width < 1) throw ShapeError("tensor dimensions must be positive");
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

template <typename T>
BasicTensor<T>::BasicTensor(int channels, int height, int width, std::vector<T> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  if (channels < 1 || height < 1 || width < 1) throw ShapeError("tensor dimensions must be positive");
  if (data_.size() != static_cast<std::size_t>(channels) * height * width)
    throw ShapeError("tensor data length does not match its shape");
}

template class BasicTensor<float>;
template class BasicTensor<double>;

}  // namespace edgedet::lcnn
