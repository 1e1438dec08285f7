#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "edgedet/geometry.hpp"
#include "edgedet/image.hpp"

namespace edgedet::hog {

/// Dalal-Triggs style layout. Blocks are `block_cells` x `block_cells`
/// cells and advance by `block_stride` cells.
struct HogConfig {
  int cell_size = 8;
  int block_cells = 2;
  int block_stride = 1;
  int bins = 9;
  int window_w = 64;
  int window_h = 128;

  friend bool operator==(const HogConfig&, const HogConfig&) = default;
};

/// Throws ConfigError when bins != 9, the window is not a whole number of
/// cells, or a block does not fit.
void validate(const HogConfig& cfg);

std::size_t descriptor_length(const HogConfig& cfg);

/// Per-pixel unsigned gradients; angles in degrees within [0, 180).
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> magnitude;
  std::vector<double> angle;

  double mag(int x, int y) const { return magnitude[static_cast<std::size_t>(y) * width + x]; }
  double ang(int x, int y) const { return angle[static_cast<std::size_t>(y) * width + x]; }
};

/// Central differences with replicated borders. For colour input the channel
/// with the largest magnitude supplies both magnitude and angle.
GradientField compute_gradients(const Image& img);

/// Magnitude-weighted orientation histogram over `cell`; each vote is split
/// linearly between the two nearest bin centres (10, 30, ..., 170 degrees),
/// wrapping across 0/180.
std::vector<double> cell_histogram(const GradientField& field, const BoundingBox& cell,
                                   int bins = 9);

using HogDescriptor = std::vector<double>;

/// Descriptor for the window whose top-left corner is (x0, y0) in `field`.
/// Blocks are L2-Hys normalised (epsilon 1e-5, clip 0.2).
HogDescriptor descriptor_at(const GradientField& field, int x0, int y0, const HogConfig& cfg);

/// Descriptor of a window-sized image; ConfigError on a size mismatch.
HogDescriptor hog_descriptor(const Image& window, const HogConfig& cfg);

struct HogSvmModel {
  HogConfig config;
  std::vector<float> weights;
  double bias = 0.0;
};

struct SvmTrainOptions {
  double lambda = 1e-3;
  int epochs = 50;
  std::uint64_t seed = 42;
};

struct SvmTrainReport {
  std::vector<double> objective;  // index 0 is the untrained objective
  double training_accuracy = 0.0;
};

/// Regularised hinge objective lambda/2 (|w|^2 + b^2) + mean hinge loss.
double svm_objective(std::span<const double> w, double b,
                     const std::vector<HogDescriptor>& descriptors, std::span<const int> labels,
                     double lambda);

/// Pegasos: primal SGD with step 1/(lambda t) over a seeded shuffle each
/// epoch. The bias is trained as a weight on a constant feature; the model is
/// the average of the final epoch's iterates.
HogSvmModel svm_train(const std::vector<HogDescriptor>& descriptors, std::span<const int> labels,
                      const HogConfig& cfg, const SvmTrainOptions& options = {},
                      SvmTrainReport* report = nullptr);

/// w.x + b. ConfigError when the descriptor length does not match.
double svm_score(const HogSvmModel& model, std::span<const double> descriptor);

enum class MergeRule { nms, biggest_box };

std::string to_string(MergeRule rule);
MergeRule merge_rule_from_string(const std::string& name);

std::vector<Detection> merge_detections(std::vector<Detection> detections, MergeRule rule,
                                        double iou_threshold = 0.3);

struct MultiscaleOptions {
  int step = 8;
  double scale_factor = 1.2;
  MergeRule merge = MergeRule::nms;
  double merge_iou = 0.3;
  double score_threshold = 0.0;
  std::string label = "person";
};

/// Scores every window of every pyramid level, keeps scores above the
/// threshold, maps them back to input coordinates and merges duplicates.
std::vector<Detection> detect_multiscale(const HogSvmModel& model, const Image& img,
                                         const MultiscaleOptions& options = {});

// JSON header with the config and bias; weights as base64 little-endian
// float32 with a CRC32 over the raw bytes.
std::string to_json(const HogSvmModel& model);
HogSvmModel hogsvm_from_json(const std::string& text);
void save_hogsvm(const HogSvmModel& model, const std::filesystem::path& path);
HogSvmModel load_hogsvm(const std::filesystem::path& path);

}  // namespace edgedet::hog
