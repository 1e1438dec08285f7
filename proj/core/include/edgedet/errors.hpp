#pragma once

#include <stdexcept>
#include <string>

namespace edgedet {

/// Base of every error raised by the library. Callers that only need to
/// report a failure can catch this; the subclasses let the CLI map failures
/// onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or corrupted file (image, model, annotation).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Operation requires a different channel count.
class ChannelError : public Error {
 public:
  using Error::Error;
};

/// Rectangle or window outside of the addressed image.
class BoundsError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameter combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training or evaluation data unusable (empty, single class, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Tensor or vector dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Operation applied to a layer kind that does not support it.
class LayerTypeError : public Error {
 public:
  using Error::Error;
};

}  // namespace edgedet
