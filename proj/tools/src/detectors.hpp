#pragma once

#include <functional>
#include <vector>

#include "commands.hpp"
#include "edgedet/geometry.hpp"
#include "edgedet/image.hpp"

namespace edgedet::cli {

/// Image in, detections in image coordinates out. Safe to call from several
/// threads at once.
using DetectFn = std::function<std::vector<Detection>(const Image&)>;

/// Loads cfg.model for cfg.detector. A missing or unreadable model file is
/// a FormatError (exit 3).
DetectFn load_detector(const RunConfig& cfg);

}  // namespace edgedet::cli
