#include <doctest.h>

#include <random>
#include <set>

#include "fusion_oracle.hpp"
#include "stcis/error.hpp"
#include "stcis/pseudo.hpp"
#include "support.hpp"

using namespace stcis;
using namespace stcis::testing;

namespace {

PseudoLabelMap random_map(int h, int w, int k, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> label(0, k - 1);
  std::uniform_int_distribution<int> conf_step(1, 8);  // coarse grid makes ties common
  PseudoLabelMap m{h, w, {}, {}};
  for (int n = 0; n < h * w; ++n) {
    m.labels.push_back(label(gen));
    m.confidence.push_back(conf_step(gen) / 8.0);
  }
  return m;
}

}  // namespace

TEST_CASE("naive fusion cases") {
  CHECK(fuse_pixel_naive(0, 0) == 0);
  CHECK(fuse_pixel_naive(0, 7) == 7);
  CHECK(fuse_pixel_naive(3, 7) == 3);
  CHECK(fuse_pixel_naive(3, 0) == 3);
}

TEST_CASE("conflict reduction cases") {
  CHECK(fuse_pixel_conflict_reduction(3, 0.6, 7, 0.9) == 7);
  CHECK(fuse_pixel_conflict_reduction(3, 0.9, 7, 0.6) == 3);
  CHECK(fuse_pixel_conflict_reduction(0, 0.8, 5, 0.4) == 5);
  CHECK(fuse_pixel_conflict_reduction(4, 0.3, 0, 0.99) == 4);
  CHECK(fuse_pixel_conflict_reduction(0, 0.3, 0, 0.99) == 0);
  CHECK(fuse_pixel_conflict_reduction(3, 0.5, 7, 0.5) == 3);
}

TEST_CASE("map fusion equals the case tables on random maps") {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 50; ++trial) {
    const PseudoLabelMap a = random_map(6, 7, 5, gen), b = random_map(6, 7, 5, gen);
    const LabelMap naive = fuse_naive(a, b), cr = fuse_conflict_reduction(a, b);
    CHECK(fuse(a, b, FusionMode::Naive) == naive);
    CHECK(fuse(a, b, FusionMode::ConflictReduction) == cr);
    for (std::size_t px = 0; px < a.size(); ++px) {
      const ClassId o = a.labels[px], n = b.labels[px];
      CHECK(naive.labels[px] == naive_table(o, n));
      CHECK(cr.labels[px] == conflict_table(o, a.confidence[px], n, b.confidence[px]));
      // The rules can differ only where both models predict foreground.
      if (o == 0 || n == 0) CHECK(naive.labels[px] == cr.labels[px]);
      const std::set<ClassId> allowed{0, o, n};
      CHECK(allowed.count(cr.labels[px]) == 1);
    }
  }
}

TEST_CASE("fusing a map with itself returns its labels") {
  std::mt19937_64 gen(2);
  const PseudoLabelMap m = random_map(5, 5, 4, gen);
  CHECK(fuse_naive(m, m) == m.label_map());
  CHECK(fuse_conflict_reduction(m, m) == m.label_map());
}

TEST_CASE("fusion rejects maps of different sizes") {
  std::mt19937_64 gen(3);
  const PseudoLabelMap a = random_map(4, 5, 3, gen), b = random_map(5, 4, 3, gen);
  CHECK_THROWS_AS(fuse_naive(a, b), ContractViolation);
  CHECK_THROWS_AS(fuse_conflict_reduction(a, b), ContractViolation);
}

TEST_CASE("a zero model labels everything background with confidence 1/K") {
  std::mt19937_64 gen(4);
  const SceneImage img = random_image(4, 6, gen);
  const PseudoLabelMap m = pseudo_label(zero_params({0, 1, 2, 3}), img);
  for (std::size_t px = 0; px < m.size(); ++px) {
    CHECK(m.labels[px] == 0);
    CHECK(m.confidence[px] == doctest::Approx(0.25).epsilon(1e-15));
  }
}

TEST_CASE("pseudo labels carry the per-pixel maximum probability") {
  std::mt19937_64 gen(5);
  const SceneImage img = random_image(8, 8, gen);
  const ModelParams params = random_params({0, 2, 4}, 12, 6, 3.0);
  const PseudoLabelMap m = pseudo_label(params, img);
  CHECK(pseudo_label(params, extract_feature_map(img)) == m);
  const Prediction pred = predict_map(params, img);
  for (std::size_t px = 0; px < m.size(); ++px) {
    const auto q = pred.probs.at(px);
    CHECK(m.confidence[px] == *std::max_element(q.begin(), q.end()));
    CHECK(m.labels[px] == params.class_ids[argmax(q)]);
    CHECK((m.confidence[px] > 0.0 && m.confidence[px] <= 1.0));
  }
}

TEST_CASE("old foreground over a new foreground: the more confident model wins") {
  // Old model calls a region class 2 with 0.55 confidence, new model calls
  // it class 4 with 0.9; elsewhere the new model is the less confident one.
  PseudoLabelMap old_map{1, 4, {2, 2, 0, 1}, {0.55, 0.95, 0.7, 0.8}};
  PseudoLabelMap new_map{1, 4, {4, 4, 4, 0}, {0.9, 0.6, 0.5, 0.9}};
  CHECK(fuse_naive(old_map, new_map).labels == std::vector<ClassId>{2, 2, 4, 1});
  CHECK(fuse_conflict_reduction(old_map, new_map).labels == std::vector<ClassId>{4, 2, 4, 1});
}
