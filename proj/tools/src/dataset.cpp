#include "dataset.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "edgedet/errors.hpp"

namespace edgedet::cli {

namespace {

bool is_netpbm(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

}  // namespace

std::vector<std::filesystem::path> collect_images(const std::vector<std::string>& inputs) {
  std::vector<std::filesystem::path> out;
  for (const auto& s : inputs) {
    const std::filesystem::path p(s);
    if (std::filesystem::is_directory(p)) {
      for (const auto& e : std::filesystem::directory_iterator(p))
        if (e.is_regular_file() && is_netpbm(e.path())) out.push_back(e.path());
    } else if (std::filesystem::is_regular_file(p)) {
      out.push_back(p);
    } else {
      throw ConfigError("input not found: " + s);
    }
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw ConfigError("no PGM/PPM images in the given inputs");
  return out;
}

std::string image_id(const std::filesystem::path& path) { return path.stem().string(); }

std::filesystem::path annotation_path(const std::filesystem::path& dir,
                                      const std::string& explicit_path) {
  return explicit_path.empty() ? dir / "annotations.txt" : std::filesystem::path(explicit_path);
}

std::vector<LabelledImage> load_dataset(const std::filesystem::path& dir,
                                        const std::string& annotations) {
  const auto ann_file = annotation_path(dir, annotations);
  if (!std::filesystem::is_regular_file(ann_file))
    throw ConfigError("annotation file not found: " + ann_file.string());
  const AnnotationSet set = load_annotations(ann_file);
  std::vector<LabelledImage> out;
  for (const auto& p : collect_images({dir.string()})) {
    LabelledImage li{p, load_image(p), {}};
    if (auto it = set.find(image_id(p)); it != set.end()) li.boxes = it->second;
    out.push_back(std::move(li));
  }
  return out;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1, jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace edgedet::cli
