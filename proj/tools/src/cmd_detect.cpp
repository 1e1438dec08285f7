#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "dataset.hpp"
#include "detectors.hpp"
#include "edgedet/annotations.hpp"
#include "edgedet/errors.hpp"

namespace edgedet::cli {

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.output);
  out << text;
  if (!out) throw ConfigError("cannot write " + cfg.output);
}

int cmd_detect(const RunConfig& cfg) {
  const auto detector = load_detector(cfg);
  const auto paths = collect_images(cfg.inputs);
  if (!cfg.overlay_dir.empty()) std::filesystem::create_directories(cfg.overlay_dir);

  std::vector<std::vector<Detection>> results(paths.size());
  parallel_for(paths.size(), cfg.jobs, [&](std::size_t i) {
    const Image img = load_image(paths[i]);
    results[i] = detector(img);
    if (!cfg.overlay_dir.empty()) {
      Image copy = to_rgb(img);
      const float red[3] = {255.0f, 0.0f, 0.0f};
      for (const auto& d : results[i]) draw_box(copy, d.box, red);
      save_image(copy, std::filesystem::path(cfg.overlay_dir) / (image_id(paths[i]) + ".ppm"));
    }
  });

  std::ostringstream out;
  std::size_t total = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (const auto& d : results[i]) {
      write_annotation(out, {image_id(paths[i]), d.box, d.label, d.score});
      ++total;
    }
  }
  emit(cfg, out.str());
  std::cerr << total << " detections in " << paths.size() << " images\n";
  return kOk;
}

}  // namespace edgedet::cli
