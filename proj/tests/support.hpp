// Independent oracles and fixtures shared by the test binaries. Nothing here
// calls into the library code it is used to check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "stcis/image.hpp"
#include "stcis/model.hpp"

namespace stcis::testing {

inline SceneImage random_image(int h, int w, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SceneImage img(h, w);
  for (auto& v : img.pixels) v = u(gen);
  return img;
}

inline std::vector<double> random_probs(std::size_t k, std::mt19937_64& gen) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> q(k);
  double sum = 0.0;
  for (auto& v : q) sum += (v = e(gen));
  for (auto& v : q) v /= sum;
  return q;
}

// Plain-loop feature extractor: RGB, i/h, j/w, then 5x5 clamped means.
inline std::vector<double> oracle_features(const SceneImage& img, int i, int j) {
  std::vector<double> f;
  for (int c = 0; c < kChannels; ++c) f.push_back(img.at(i, j, c));
  f.push_back(static_cast<double>(i) / img.h);
  f.push_back(static_cast<double>(j) / img.w);
  for (int c = 0; c < kChannels; ++c) {
    double sum = 0.0;
    for (int di = -2; di <= 2; ++di)
      for (int dj = -2; dj <= 2; ++dj) {
        const int ii = std::clamp(i + di, 0, img.h - 1);
        const int jj = std::clamp(j + dj, 0, img.w - 1);
        sum += img.at(ii, jj, c);
      }
    f.push_back(sum / 25.0);
  }
  return f;
}

// Probabilities from the network equations, accumulated in long double.
inline std::vector<long double> oracle_probs(const ModelParams& p, const double* f) {
  const std::size_t H = p.hidden_dim, K = p.class_ids.size(), F = p.feature_dim;
  std::vector<long double> hidden(H);
  for (std::size_t h = 0; h < H; ++h) {
    long double z = p.b1[h];
    for (std::size_t d = 0; d < F; ++d) z += static_cast<long double>(p.w1[d * H + h]) * f[d];
    hidden[h] = std::tanh(z);
  }
  std::vector<long double> logit(K);
  long double top = -INFINITY;
  for (std::size_t k = 0; k < K; ++k) {
    long double z = p.b2[k];
    for (std::size_t h = 0; h < H; ++h) z += hidden[h] * p.w2[h * K + k];
    logit[k] = z;
    top = std::max(top, z);
  }
  long double norm = 0.0L;
  for (auto& z : logit) norm += (z = std::exp(z - top));
  for (auto& z : logit) z /= norm;
  return logit;
}

// mean CE - lambda * mean entropy, long double throughout.
inline long double oracle_loss(const ModelParams& p, const std::vector<double>& features,
                               const std::vector<std::size_t>& targets, double lambda) {
  long double ce = 0.0L, ent = 0.0L;
  for (std::size_t n = 0; n < targets.size(); ++n) {
    const auto q = oracle_probs(p, features.data() + n * p.feature_dim);
    ce -= std::log(std::max(q[targets[n]], 1e-12L));
    for (const long double v : q)
      if (v > 0) ent -= v * std::log(std::max(v, 1e-12L));
  }
  const long double count = static_cast<long double>(targets.size());
  return ce / count - lambda * ent / count;
}

struct LossInstance {
  ModelParams params;
  std::vector<double> features;
  std::vector<std::size_t> targets;
};

inline LossInstance random_instance(std::mt19937_64& gen, std::size_t hidden = 6,
                                    std::size_t pixels = 5) {
  std::uniform_int_distribution<int> kdist(2, 6);
  const int k = kdist(gen);
  std::vector<ClassId> ids;
  for (int c = 0; c < k; ++c) ids.push_back(c);
  LossInstance inst;
  inst.params = random_params(ids, gen(), hidden, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  inst.features.resize(pixels * kFeatureDim);
  for (auto& v : inst.features) v = u(gen);
  std::uniform_int_distribution<std::size_t> t(0, static_cast<std::size_t>(k - 1));
  for (std::size_t n = 0; n < pixels; ++n) inst.targets.push_back(t(gen));
  return inst;
}

}  // namespace stcis::testing
