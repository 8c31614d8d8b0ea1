#include "stcis/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stcis/error.hpp"
#include "stcis/rng.hpp"

namespace stcis {

FeatureVector extract_features(const SceneImage& image, int i, int j) {
  require(i >= 0 && i < image.h && j >= 0 && j < image.w,
          "extract_features: pixel (" + std::to_string(i) + ", " + std::to_string(j) +
              ") outside " + std::to_string(image.h) + "x" + std::to_string(image.w));
  FeatureVector f{};
  for (int c = 0; c < kChannels; ++c) f[c] = image.at(i, j, c);
  f[kChannels] = static_cast<double>(i) / image.h;
  f[kChannels + 1] = static_cast<double>(j) / image.w;

  // Out-of-range window taps read the nearest edge pixel, so every mean
  // averages exactly (2r+1)^2 values.
  constexpr int side = 2 * kWindowRadius + 1;
  for (int c = 0; c < kChannels; ++c) {
    double sum = 0.0;
    for (int di = -kWindowRadius; di <= kWindowRadius; ++di) {
      const int a = std::clamp(i + di, 0, image.h - 1);
      for (int dj = -kWindowRadius; dj <= kWindowRadius; ++dj)
        sum += image.at(a, std::clamp(j + dj, 0, image.w - 1), c);
    }
    f[kChannels + 2 + c] = sum / (side * side);
  }
  return f;
}

FeatureMap extract_feature_map(const SceneImage& image) {
  FeatureMap map;
  map.h = image.h;
  map.w = image.w;
  map.values.resize(map.pixels() * kFeatureDim);
  for (int i = 0; i < image.h; ++i) {
    for (int j = 0; j < image.w; ++j) {
      const auto f = extract_features(image, i, j);
      std::copy(f.begin(), f.end(),
                map.values.begin() + (static_cast<std::ptrdiff_t>(i) * image.w + j) * kFeatureDim);
    }
  }
  return map;
}

std::optional<std::size_t> ModelParams::index_of(ClassId id) const {
  const auto it = std::find(class_ids.begin(), class_ids.end(), id);
  if (it == class_ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - class_ids.begin());
}

void ModelParams::validate() const {
  require(!class_ids.empty() && class_ids.front() == kBackground,
          "ModelParams: class_ids must start with background (0)");
  for (std::size_t k = 1; k < class_ids.size(); ++k)
    require(class_ids[k] > class_ids[k - 1], "ModelParams: class_ids must be strictly increasing");
  const std::size_t k = num_classes();
  require(w1.size() == feature_dim * hidden_dim && b1.size() == hidden_dim &&
              w2.size() == hidden_dim * k && b2.size() == k,
          "ModelParams: parameter shapes inconsistent with dimensions");
  const auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  require(finite(w1) && finite(b1) && finite(w2) && finite(b2),
          "ModelParams: non-finite parameter");
}

ModelParams zero_params(std::vector<ClassId> class_ids, std::size_t hidden_dim) {
  ModelParams p;
  p.hidden_dim = hidden_dim;
  p.class_ids = std::move(class_ids);
  p.w1.assign(p.feature_dim * hidden_dim, 0.0);
  p.b1.assign(hidden_dim, 0.0);
  p.w2.assign(hidden_dim * p.num_classes(), 0.0);
  p.b2.assign(p.num_classes(), 0.0);
  p.validate();
  return p;
}

ModelParams random_params(std::vector<ClassId> class_ids, std::uint64_t seed,
                          std::size_t hidden_dim, double scale) {
  ModelParams p = zero_params(std::move(class_ids), hidden_dim);
  Rng rng(seed);
  for (auto* v : {&p.w1, &p.b1, &p.w2, &p.b2})
    for (double& x : *v) x = rng.uniform(-scale, scale);
  return p;
}

void TrainConfig::validate() const {
  require(learning_rate > 0.0, "TrainConfig: learning_rate must be positive");
  require(epochs >= 1, "TrainConfig: epochs must be at least 1");
  require(lambda >= 0.0, "TrainConfig: lambda must be nonnegative");
  require(batch_pixels >= 1, "TrainConfig: batch_pixels must be positive");
}

namespace {

// Hidden activations and logits for one pixel, written into caller buffers.
void forward_into(const ModelParams& p, std::span<const double> f, std::span<double> hidden,
                  std::span<double> logits) {
  const std::size_t H = p.hidden_dim, K = p.num_classes();
  std::copy(p.b1.begin(), p.b1.end(), hidden.begin());
  for (std::size_t a = 0; a < p.feature_dim; ++a) {
    const double x = f[a];
    const double* row = p.w1.data() + a * H;
    for (std::size_t h = 0; h < H; ++h) hidden[h] += x * row[h];
  }
  for (std::size_t h = 0; h < H; ++h) hidden[h] = std::tanh(hidden[h]);
  std::copy(p.b2.begin(), p.b2.end(), logits.begin());
  for (std::size_t h = 0; h < H; ++h) {
    const double z = hidden[h];
    const double* row = p.w2.data() + h * K;
    for (std::size_t k = 0; k < K; ++k) logits[k] += z * row[k];
  }
}

void softmax_into(std::span<const double> logits, std::span<double> q) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    q[k] = std::exp(logits[k] - top);
    sum += q[k];
  }
  for (double& v : q) v /= sum;
}

void check_batch(const PixelBatch& batch, const ModelParams& params) {
  require(batch.size() > 0, "empty batch");
  require(batch.features.size() == batch.size() * params.feature_dim,
          "batch feature rows do not match the model's feature dimension");
  for (const std::size_t y : batch.targets)
    require(y < params.num_classes(), "batch target outside the model's label space");
}

}  // namespace

std::vector<double> forward(const ModelParams& params, std::span<const double> features) {
  require(features.size() == params.feature_dim,
          "forward: feature vector has " + std::to_string(features.size()) +
              " entries, model expects " + std::to_string(params.feature_dim));
  std::vector<double> hidden(params.hidden_dim), logits(params.num_classes());
  forward_into(params, features, hidden, logits);
  return logits;
}

std::vector<double> softmax(std::span<const double> logits) {
  require(!logits.empty(), "softmax: empty logits");
  std::vector<double> q(logits.size());
  softmax_into(logits, q);
  return q;
}

double ce_loss(std::span<const double> q, std::size_t y) {
  require(y < q.size(), "ce_loss: label index outside the label space");
  return -std::log(std::max(q[y], kProbFloor));
}

double self_entropy(std::span<const double> q) {
  double h = 0.0;
  for (const double v : q)
    if (v > 0.0) h -= v * std::log(std::max(v, kProbFloor));
  return h;
}

Gradients Gradients::zeros_like(const ModelParams& params) {
  return {std::vector<double>(params.w1.size(), 0.0), std::vector<double>(params.b1.size(), 0.0),
          std::vector<double>(params.w2.size(), 0.0), std::vector<double>(params.b2.size(), 0.0)};
}

double total_loss(const PixelBatch& batch, const ModelParams& params, double lambda) {
  check_batch(batch, params);
  require(lambda >= 0.0, "total_loss: lambda must be nonnegative");
  std::vector<double> hidden(params.hidden_dim), logits(params.num_classes()),
      q(params.num_classes());
  double ce = 0.0, ent = 0.0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    forward_into(params, batch.row(n, params.feature_dim), hidden, logits);
    softmax_into(logits, q);
    ce += ce_loss(q, batch.targets[n]);
    if (lambda != 0.0) ent += self_entropy(q);
  }
  const double count = static_cast<double>(batch.size());
  if (lambda == 0.0) return ce / count;
  return ce / count - lambda * (ent / count);
}

double loss_and_gradient(const PixelBatch& batch, const ModelParams& params, double lambda,
                         Gradients& grads) {
  check_batch(batch, params);
  require(lambda >= 0.0, "gradient: lambda must be nonnegative");
  const std::size_t F = params.feature_dim, H = params.hidden_dim, K = params.num_classes();
  grads = Gradients::zeros_like(params);
  std::vector<double> hidden(H), logits(K), q(K), dlogits(K), dhidden(H);
  const double count = static_cast<double>(batch.size());
  const double scale = 1.0 / count;
  double ce = 0.0, ent = 0.0;

  for (std::size_t n = 0; n < batch.size(); ++n) {
    const auto f = batch.row(n, F);
    forward_into(params, f, hidden, logits);
    softmax_into(logits, q);
    const std::size_t y = batch.targets[n];
    ce += ce_loss(q, y);

    // d(CE)/dz = q - e_y;  d(-lambda H)/dz_k = lambda q_k (log q_k + H).
    double h_entropy = 0.0;
    if (lambda != 0.0) {
      h_entropy = self_entropy(q);
      ent += h_entropy;
    }
    for (std::size_t k = 0; k < K; ++k) {
      double g = q[k] - (k == y ? 1.0 : 0.0);
      if (lambda != 0.0) g += lambda * q[k] * (std::log(std::max(q[k], kProbFloor)) + h_entropy);
      dlogits[k] = g * scale;
    }

    for (std::size_t k = 0; k < K; ++k) grads.b2[k] += dlogits[k];
    for (std::size_t h = 0; h < H; ++h) {
      const double z = hidden[h];
      const double* w2row = params.w2.data() + h * K;
      double* g2row = grads.w2.data() + h * K;
      double back = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        g2row[k] += z * dlogits[k];
        back += w2row[k] * dlogits[k];
      }
      dhidden[h] = back * (1.0 - z * z);
    }
    for (std::size_t h = 0; h < H; ++h) grads.b1[h] += dhidden[h];
    for (std::size_t a = 0; a < F; ++a) {
      const double x = f[a];
      if (x == 0.0) continue;
      double* g1row = grads.w1.data() + a * H;
      for (std::size_t h = 0; h < H; ++h) g1row[h] += x * dhidden[h];
    }
  }
  if (lambda == 0.0) return ce / count;
  return ce / count - lambda * (ent / count);
}

Gradients gradient(const PixelBatch& batch, const ModelParams& params, double lambda) {
  Gradients grads;
  loss_and_gradient(batch, params, lambda, grads);
  return grads;
}

void sgd_step_inplace(ModelParams& params, const Gradients& grads, double learning_rate) {
  require(grads.w1.size() == params.w1.size() && grads.b1.size() == params.b1.size() &&
              grads.w2.size() == params.w2.size() && grads.b2.size() == params.b2.size(),
          "sgd_step: gradient shape does not match parameters");
  const auto apply = [learning_rate](std::vector<double>& p, const std::vector<double>& g) {
    for (std::size_t n = 0; n < p.size(); ++n) p[n] -= learning_rate * g[n];
  };
  apply(params.w1, grads.w1);
  apply(params.b1, grads.b1);
  apply(params.w2, grads.w2);
  apply(params.b2, grads.b2);
}

ModelParams sgd_step(const ModelParams& params, const Gradients& grads, double learning_rate) {
  ModelParams next = params;
  sgd_step_inplace(next, grads, learning_rate);
  return next;
}

ModelParams expand_head(const ModelParams& params, std::span<const ClassId> new_class_ids,
                        const ModelParams* donor) {
  ModelParams out = params;
  if (new_class_ids.empty()) return out;
  std::vector<std::size_t> donor_cols;
  for (const ClassId id : new_class_ids) {
    require(id > kBackground, "expand_head: cannot add background as a new class");
    require(!out.index_of(id), "expand_head: class " + std::to_string(id) + " already registered");
    require(id > out.class_ids.back(),
            "expand_head: class " + std::to_string(id) + " breaks increasing class order");
    out.class_ids.push_back(id);
    if (donor != nullptr) {
      require(donor->hidden_dim == params.hidden_dim,
              "expand_head: donor hidden dimension differs");
      const auto col = donor->index_of(id);
      require(col.has_value(), "expand_head: donor lacks class " + std::to_string(id));
      donor_cols.push_back(*col);
    }
  }

  const std::size_t H = params.hidden_dim, K_old = params.num_classes(), K = out.num_classes();
  out.w2.assign(H * K, 0.0);
  out.b2.assign(K, 0.0);
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t k = 0; k < K_old; ++k) out.w2[h * K + k] = params.w2[h * K_old + k];
  std::copy(params.b2.begin(), params.b2.end(), out.b2.begin());
  if (donor != nullptr) {
    const std::size_t K_donor = donor->num_classes();
    for (std::size_t n = 0; n < donor_cols.size(); ++n) {
      const std::size_t dst = K_old + n, src = donor_cols[n];
      for (std::size_t h = 0; h < H; ++h) out.w2[h * K + dst] = donor->w2[h * K_donor + src];
      out.b2[dst] = donor->b2[src];
    }
  }
  return out;
}

LabelMap PseudoLabelMap::label_map() const {
  LabelMap map(h, w);
  map.labels = labels;
  return map;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k)
    if (values[k] > values[best]) best = k;
  return best;
}

Prediction predict_map(const ModelParams& params, const FeatureMap& features) {
  require(params.feature_dim == kFeatureDim, "predict_map: model feature dimension mismatch");
  const std::size_t H = params.hidden_dim, K = params.num_classes(), P = features.pixels();
  Prediction out;
  out.probs = {features.h, features.w, K, std::vector<double>(P * K)};
  out.labels = {features.h, features.w, std::vector<ClassId>(P), std::vector<double>(P)};
  std::vector<double> hidden(H), logits(K);
  for (std::size_t n = 0; n < P; ++n) {
    std::span<double> q(out.probs.probs.data() + n * K, K);
    forward_into(params, features.at(n), hidden, logits);
    softmax_into(logits, q);
    const std::size_t best = argmax(q);
    out.labels.labels[n] = params.class_ids[best];
    out.labels.confidence[n] = q[best];
  }
  return out;
}

Prediction predict_map(const ModelParams& params, const SceneImage& image) {
  return predict_map(params, extract_feature_map(image));
}

PseudoLabelMap predict_labels(const ModelParams& params, const FeatureMap& features) {
  require(params.feature_dim == kFeatureDim, "predict_labels: model feature dimension mismatch");
  const std::size_t H = params.hidden_dim, K = params.num_classes(), P = features.pixels();
  PseudoLabelMap out{features.h, features.w, std::vector<ClassId>(P), std::vector<double>(P)};
  std::vector<double> hidden(H), logits(K), q(K);
  for (std::size_t n = 0; n < P; ++n) {
    forward_into(params, features.at(n), hidden, logits);
    softmax_into(logits, q);
    const std::size_t best = argmax(q);
    out.labels[n] = params.class_ids[best];
    out.confidence[n] = q[best];
  }
  return out;
}

}  // namespace stcis
