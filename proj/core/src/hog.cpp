#include "edgedet/hog.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "edgedet/errors.hpp"

namespace edgedet::hog {

void validate(const HogConfig& cfg) {
  if (cfg.bins != 9) throw ConfigError("HOG uses 9 orientation bins");
  if (cfg.cell_size < 1 || cfg.block_cells < 1 || cfg.block_stride < 1)
    throw ConfigError("HOG cell, block and stride must be positive");
  if (cfg.window_w % cfg.cell_size != 0 || cfg.window_h % cfg.cell_size != 0)
    throw ConfigError("HOG window must be a whole number of cells");
  if (cfg.window_w / cfg.cell_size < cfg.block_cells ||
      cfg.window_h / cfg.cell_size < cfg.block_cells)
    throw ConfigError("HOG block larger than window");
}

namespace {

int blocks_along(int cells, const HogConfig& cfg) {
  return (cells - cfg.block_cells) / cfg.block_stride + 1;
}

}  // namespace

std::size_t descriptor_length(const HogConfig& cfg) {
  validate(cfg);
  const int bx = blocks_along(cfg.window_w / cfg.cell_size, cfg);
  const int by = blocks_along(cfg.window_h / cfg.cell_size, cfg);
  return static_cast<std::size_t>(bx) * by * cfg.block_cells * cfg.block_cells * cfg.bins;
}

GradientField compute_gradients(const Image& img) {
  GradientField field;
  field.width = img.width();
  field.height = img.height();
  const std::size_t n = static_cast<std::size_t>(img.width()) * img.height();
  field.magnitude.assign(n, 0.0);
  field.angle.assign(n, 0.0);

  const int w = img.width(), h = img.height();
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
      double best_mag = -1.0, best_gx = 0.0, best_gy = 0.0;
      for (int c = 0; c < img.channels(); ++c) {
        const double gx = static_cast<double>(img.at(xp, y, c)) - img.at(xm, y, c);
        const double gy = static_cast<double>(img.at(x, yp, c)) - img.at(x, ym, c);
        const double mag = std::sqrt(gx * gx + gy * gy);
        if (mag > best_mag) {
          best_mag = mag;
          best_gx = gx;
          best_gy = gy;
        }
      }
      double angle = 0.0;
      if (best_mag > 0.0) {
        angle = std::atan2(best_gy, best_gx) * 180.0 / std::numbers::pi;
        if (angle < 0.0) angle += 180.0;
        if (angle >= 180.0) angle -= 180.0;
      }
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      field.magnitude[i] = best_mag;
      field.angle[i] = angle;
    }
  }
  return field;
}

namespace {

constexpr double kBinWidth = 20.0;

inline void vote(double* hist, int bins, double angle, double mag) {
  const double pos = (angle - 0.5 * kBinWidth) / kBinWidth;
  const double lo = std::floor(pos);
  const double frac = pos - lo;
  const int b0 = (static_cast<int>(lo) % bins + bins) % bins;
  const int b1 = (b0 + 1) % bins;
  hist[b0] += (1.0 - frac) * mag;
  hist[b1] += frac * mag;
}

void accumulate_cell(const GradientField& field, int x0, int y0, int w, int h, double* hist,
                     int bins) {
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) vote(hist, bins, field.ang(x, y), field.mag(x, y));
}

void l2_normalise(double* v, std::size_t n) {
  constexpr double eps = 1e-5;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += v[i] * v[i];
  const double inv = 1.0 / std::sqrt(ss + eps * eps);
  for (std::size_t i = 0; i < n; ++i) v[i] *= inv;
}

}  // namespace

std::vector<double> cell_histogram(const GradientField& field, const BoundingBox& cell, int bins) {
  if (bins != 9) throw ConfigError("HOG uses 9 orientation bins");
  const int x0 = static_cast<int>(cell.x), y0 = static_cast<int>(cell.y);
  const int w = static_cast<int>(cell.w), h = static_cast<int>(cell.h);
  if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > field.width || y0 + h > field.height)
    throw BoundsError("HOG cell outside gradient field");
  std::vector<double> hist(bins, 0.0);
  accumulate_cell(field, x0, y0, w, h, hist.data(), bins);
  return hist;
}

HogDescriptor descriptor_at(const GradientField& field, int x0, int y0, const HogConfig& cfg) {
  validate(cfg);
  if (x0 < 0 || y0 < 0 || x0 + cfg.window_w > field.width || y0 + cfg.window_h > field.height)
    throw BoundsError("HOG window outside gradient field");

  const int cells_x = cfg.window_w / cfg.cell_size;
  const int cells_y = cfg.window_h / cfg.cell_size;
  std::vector<double> cells(static_cast<std::size_t>(cells_x) * cells_y * cfg.bins, 0.0);
  for (int cy = 0; cy < cells_y; ++cy)
    for (int cx = 0; cx < cells_x; ++cx)
      accumulate_cell(field, x0 + cx * cfg.cell_size, y0 + cy * cfg.cell_size, cfg.cell_size,
                      cfg.cell_size, &cells[(static_cast<std::size_t>(cy) * cells_x + cx) * cfg.bins],
                      cfg.bins);

  const int bx = blocks_along(cells_x, cfg), by = blocks_along(cells_y, cfg);
  const std::size_t block_len = static_cast<std::size_t>(cfg.block_cells) * cfg.block_cells * cfg.bins;
  HogDescriptor out;
  out.reserve(static_cast<std::size_t>(bx) * by * block_len);
  for (int by_i = 0; by_i < by; ++by_i) {
    for (int bx_i = 0; bx_i < bx; ++bx_i) {
      const std::size_t start = out.size();
      for (int dy = 0; dy < cfg.block_cells; ++dy) {
        for (int dx = 0; dx < cfg.block_cells; ++dx) {
          const int cx = bx_i * cfg.block_stride + dx, cy = by_i * cfg.block_stride + dy;
          const double* h = &cells[(static_cast<std::size_t>(cy) * cells_x + cx) * cfg.bins];
          out.insert(out.end(), h, h + cfg.bins);
        }
      }
      double* block = out.data() + start;
      l2_normalise(block, block_len);
      for (std::size_t i = 0; i < block_len; ++i) block[i] = std::min(block[i], 0.2);
      l2_normalise(block, block_len);
    }
  }
  return out;
}

HogDescriptor hog_descriptor(const Image& window, const HogConfig& cfg) {
  validate(cfg);
  if (window.width() != cfg.window_w || window.height() != cfg.window_h)
    throw ConfigError("HOG window size does not match config");
  return descriptor_at(compute_gradients(window), 0, 0, cfg);
}

std::string to_string(MergeRule rule) {
  return rule == MergeRule::nms ? "nms" : "biggest-box";
}

MergeRule merge_rule_from_string(const std::string& name) {
  if (name == "nms") return MergeRule::nms;
  if (name == "biggest-box") return MergeRule::biggest_box;
  throw ConfigError("unknown merge rule '" + name + "'");
}

std::vector<Detection> merge_detections(std::vector<Detection> detections, MergeRule rule,
                                        double iou_threshold) {
  return rule == MergeRule::nms ? nms(std::move(detections), iou_threshold)
                                : merge_biggest_box(std::move(detections), iou_threshold);
}

std::vector<Detection> detect_multiscale(const HogSvmModel& model, const Image& img,
                                         const MultiscaleOptions& options) {
  const HogConfig& cfg = model.config;
  validate(cfg);
  if (model.weights.size() != descriptor_length(cfg))
    throw ConfigError("model weights do not match its HOG config");
  if (options.step < 1) throw ConfigError("window step must be >= 1");

  std::vector<Detection> hits;
  const int min_side = std::max(8, std::min(cfg.window_w, cfg.window_h));
  for (const auto& level : build_pyramid(img, options.scale_factor, min_side)) {
    const Image& li = level.image;
    if (li.width() < cfg.window_w || li.height() < cfg.window_h) continue;
    const GradientField field = compute_gradients(li);
    const double sx = static_cast<double>(img.width()) / li.width();
    const double sy = static_cast<double>(img.height()) / li.height();
    for (int y = 0; y + cfg.window_h <= li.height(); y += options.step) {
      for (int x = 0; x + cfg.window_w <= li.width(); x += options.step) {
        const double score = svm_score(model, descriptor_at(field, x, y, cfg));
        if (score <= options.score_threshold) continue;
        const BoundingBox box =
            clamp_box({x * sx, y * sy, cfg.window_w * sx, cfg.window_h * sy}, img.width(),
                      img.height());
        hits.push_back({box, options.label, score});
      }
    }
  }
  return merge_detections(std::move(hits), options.merge, options.merge_iou);
}

}  // namespace edgedet::hog
