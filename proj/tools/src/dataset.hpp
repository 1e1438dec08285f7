#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "edgedet/annotations.hpp"
#include "edgedet/image.hpp"

namespace edgedet::cli {

/// PGM/PPM files named directly, or found (non-recursively) in a named
/// directory, sorted by path. ConfigError when a path does not exist or no
/// image is found.
std::vector<std::filesystem::path> collect_images(const std::vector<std::string>& inputs);

/// Image id used in annotation files: the file name without extension.
std::string image_id(const std::filesystem::path& path);

/// `<dir>/annotations.txt` unless an explicit path is given.
std::filesystem::path annotation_path(const std::filesystem::path& dir,
                                      const std::string& explicit_path);

struct LabelledImage {
  std::filesystem::path path;
  Image image;
  std::vector<Annotation> boxes;
};

/// Every image in `dir` with the annotations of its id (possibly none).
std::vector<LabelledImage> load_dataset(const std::filesystem::path& dir,
                                        const std::string& annotations);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace edgedet::cli
