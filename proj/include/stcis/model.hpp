#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "stcis/image.hpp"

namespace stcis {

// Fixed per-pixel feature extractor: RGB, normalized row/column, and the
// per-channel mean over a border-clamped 5x5 window.
inline constexpr std::size_t kFeatureDim = 2 * kChannels + 2;
inline constexpr int kWindowRadius = 2;
inline constexpr std::size_t kDefaultHiddenDim = 32;

// Floor applied to probabilities inside logarithms.
inline constexpr double kProbFloor = 1e-12;

using FeatureVector = std::array<double, kFeatureDim>;

FeatureVector extract_features(const SceneImage& image, int i, int j);

// Features of every pixel of an image, row-major, kFeatureDim per pixel.
struct FeatureMap {
  int h = 0;
  int w = 0;
  std::vector<double> values;

  std::size_t pixels() const { return static_cast<std::size_t>(h) * w; }
  std::span<const double> at(std::size_t pixel) const {
    return {values.data() + pixel * kFeatureDim, kFeatureDim};
  }
};

FeatureMap extract_feature_map(const SceneImage& image);

// Per-pixel classifier: logits = w2^T tanh(w1^T f + b1) + b2.
// w1 is feature_dim x hidden_dim and w2 is hidden_dim x K, both row-major.
struct ModelParams {
  std::size_t feature_dim = kFeatureDim;
  std::size_t hidden_dim = kDefaultHiddenDim;
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  std::vector<double> b2;
  std::vector<ClassId> class_ids;

  std::size_t num_classes() const { return class_ids.size(); }
  std::optional<std::size_t> index_of(ClassId id) const;

  double& w1_at(std::size_t f, std::size_t h) { return w1[f * hidden_dim + h]; }
  double w1_at(std::size_t f, std::size_t h) const { return w1[f * hidden_dim + h]; }
  double& w2_at(std::size_t h, std::size_t k) { return w2[h * num_classes() + k]; }
  double w2_at(std::size_t h, std::size_t k) const { return w2[h * num_classes() + k]; }

  // Throws ContractViolation when shapes, class registry or values are invalid.
  void validate() const;

  bool operator==(const ModelParams&) const = default;
};

// All-zero parameters over the given label set.
ModelParams zero_params(std::vector<ClassId> class_ids,
                        std::size_t hidden_dim = kDefaultHiddenDim);

// Uniform [-scale, scale] initialization from a seeded stream.
ModelParams random_params(std::vector<ClassId> class_ids, std::uint64_t seed,
                          std::size_t hidden_dim = kDefaultHiddenDim, double scale = 0.1);

struct TrainConfig {
  double learning_rate = 1e-2;
  int epochs = 1;
  double lambda = 0.0;
  std::size_t batch_pixels = 256;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

std::vector<double> forward(const ModelParams& params, std::span<const double> features);

// Max-shifted softmax.
std::vector<double> softmax(std::span<const double> logits);

// -log q_y with q_y floored at kProbFloor.
double ce_loss(std::span<const double> q, std::size_t y);

// -sum_k q_k log q_k, with 0 log 0 = 0.
double self_entropy(std::span<const double> q);

// A batch of labeled pixels. `features` holds size() rows of feature_dim
// values; `targets` are indices into the model's class_ids.
struct PixelBatch {
  std::span<const double> features;
  std::span<const std::size_t> targets;

  std::size_t size() const { return targets.size(); }
  std::span<const double> row(std::size_t n, std::size_t dim) const {
    return features.subspan(n * dim, dim);
  }
};

// Gradient record with the same layout as ModelParams' weight arrays.
struct Gradients {
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  std::vector<double> b2;

  static Gradients zeros_like(const ModelParams& params);
};

// mean_n CE(n) - lambda * mean_n H(n), all pixels weighted uniformly.
double total_loss(const PixelBatch& batch, const ModelParams& params, double lambda);

// Exact gradient of total_loss.
Gradients gradient(const PixelBatch& batch, const ModelParams& params, double lambda);

// Loss and gradient from a single pass; `grads` is overwritten.
double loss_and_gradient(const PixelBatch& batch, const ModelParams& params, double lambda,
                         Gradients& grads);

ModelParams sgd_step(const ModelParams& params, const Gradients& grads, double learning_rate);
void sgd_step_inplace(ModelParams& params, const Gradients& grads, double learning_rate);

// Appends one output column per new class. Columns come from `donor` when
// given, otherwise they are zero. Existing columns are copied bit-for-bit.
ModelParams expand_head(const ModelParams& params, std::span<const ClassId> new_class_ids,
                        const ModelParams* donor = nullptr);

// Per-pixel argmax label (class id) and max probability.
struct PseudoLabelMap {
  int h = 0;
  int w = 0;
  std::vector<ClassId> labels;
  std::vector<double> confidence;

  std::size_t size() const { return labels.size(); }
  LabelMap label_map() const;
  bool operator==(const PseudoLabelMap&) const = default;
};

// H x W x K probabilities, row-major with classes innermost.
struct ProbMap {
  int h = 0;
  int w = 0;
  std::size_t num_classes = 0;
  std::vector<double> probs;

  std::span<const double> at(std::size_t pixel) const {
    return {probs.data() + pixel * num_classes, num_classes};
  }
  bool operator==(const ProbMap&) const = default;
};

// Argmax with ties resolved to the lowest index.
std::size_t argmax(std::span<const double> values);

struct Prediction {
  ProbMap probs;
  PseudoLabelMap labels;
};

Prediction predict_map(const ModelParams& params, const SceneImage& image);
Prediction predict_map(const ModelParams& params, const FeatureMap& features);

// Label map only; skips storing the probability volume.
PseudoLabelMap predict_labels(const ModelParams& params, const FeatureMap& features);

}  // namespace stcis
