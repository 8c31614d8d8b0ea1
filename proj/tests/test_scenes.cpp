#include <doctest.h>

#include <cmath>
#include <set>

#include "stcis/error.hpp"
#include "stcis/scenes.hpp"

using namespace stcis;

namespace {

// Shape extents written out from their definitions.
bool inside(const Placement& p, int i, int j) {
  const double y = i - p.ci, x = j - p.cj, r = p.size;
  switch (p.shape) {
    case Shape::Disk: return x * x + y * y <= r * r;
    case Shape::Square: return std::max(std::abs(x), std::abs(y)) <= r;
    case Shape::Triangle: return y >= -r && y <= r && 2.0 * std::abs(x) <= y + r;
    case Shape::Cross:
      return (3.0 * std::abs(y) <= r && std::abs(x) <= r) || (3.0 * std::abs(x) <= r && std::abs(y) <= r);
    case Shape::Ring: return x * x + y * y <= r * r && 4.0 * (x * x + y * y) >= r * r;
  }
  return false;
}

// Paints placements in order; the last shape covering a pixel wins.
LabelMap repaint(const Scene& scene) {
  LabelMap out(scene.labels.h, scene.labels.w);
  for (const auto& p : scene.placements)
    for (int i = 0; i < out.h; ++i)
      for (int j = 0; j < out.w; ++j)
        if (inside(p, i, j)) out.at(i, j) = p.id;
  return out;
}

std::set<ClassId> labels_of(const LabelMap& m) { return {m.labels.begin(), m.labels.end()}; }

const std::vector<std::string> kPresets{"4-1", "3-2", "3-1x2"};

}  // namespace

TEST_CASE("default palette is injective and validates") {
  for (int n = 1; n <= 10; ++n) CHECK_NOTHROW(default_generator(n).validate());
  CHECK_THROWS_AS(default_generator(11), ContractViolation);
  GeneratorConfig cfg = default_generator(3);
  cfg.classes[1].shape = cfg.classes[0].shape;
  cfg.classes[1].color = cfg.classes[0].color;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
}

TEST_CASE("generated labels are exactly the visible extents of the placed shapes") {
  const GeneratorConfig cfg = default_generator(10);
  Rng rng(5);
  for (int n = 0; n < 200; ++n) {
    const Scene scene = generate_scene(cfg, cfg.class_ids(), rng);
    REQUIRE(!scene.placements.empty());
    CHECK(scene.placements.size() <= 3u);
    CHECK(scene.labels == repaint(scene));
    for (const auto& p : scene.placements) {
      CHECK(p.shape == cfg.find(p.id)->shape);
      CHECK(p.ci - p.size >= 0);
      CHECK(p.ci + p.size < cfg.h);
    }
    for (const double v : scene.image.pixels) CHECK((v >= 0.0 && v <= 1.0));
  }
}

TEST_CASE("a single object of class c yields labels {0, c}") {
  GeneratorConfig cfg = default_generator(5);
  cfg.min_objects = cfg.max_objects = 1;
  Rng rng(9);
  for (ClassId c = 1; c <= 5; ++c) {
    const Scene scene = generate_scene(cfg, {c}, rng);
    CHECK(labels_of(scene.labels) == std::set<ClassId>{0, c});
  }
}

TEST_CASE("oversized shapes are clamped to the canvas") {
  GeneratorConfig cfg = default_generator(5);
  cfg.h = cfg.w = 9;
  cfg.min_size = cfg.max_size = 30;
  Rng rng(1);
  for (int n = 0; n < 20; ++n) {
    const Scene scene = generate_scene(cfg, cfg.class_ids(), rng);
    for (const auto& p : scene.placements) CHECK(p.size <= 4);
    CHECK(scene.labels == repaint(scene));
  }
}

TEST_CASE("generation is deterministic in the rng state") {
  const GeneratorConfig cfg = default_generator(5);
  Rng a(77), b(77);
  for (int n = 0; n < 10; ++n) {
    const Scene x = generate_scene(cfg, {1, 4}, a);
    const Scene y = generate_scene(cfg, {1, 4}, b);
    CHECK(x.image == y.image);
    CHECK(x.labels == y.labels);
  }
  CHECK_THROWS_AS(generate_scene(cfg, {}, a), ContractViolation);
  CHECK_THROWS_AS(generate_scene(cfg, {6}, a), ContractViolation);
}

TEST_CASE("mask_labels keeps current classes only") {
  LabelMap gt(2, 3);
  gt.labels = {0, 1, 2, 3, 3, 1};
  const LabelMap m = mask_labels(gt, {3});
  CHECK(m.labels == std::vector<ClassId>{0, 0, 0, 3, 3, 0});
  CHECK(mask_labels(gt, {1, 2, 3}) == gt);
  CHECK(mask_labels(gt, {}).labels == std::vector<ClassId>(6, 0));
}

TEST_CASE("presets and label sets") {
  for (const auto& name : kPresets) CHECK(scenario_preset(name).has_value());
  CHECK(scenario_preset("3-1×2")->class_partition == scenario_preset("3-1x2")->class_partition);
  CHECK_FALSE(scenario_preset("19-1").has_value());

  const ScenarioSpec spec = *scenario_preset("3-1x2");
  CHECK(spec.sessions() == 3);
  CHECK(spec.label_set(1) == std::vector<ClassId>{0, 1, 2, 3});
  CHECK(spec.label_set(2) == std::vector<ClassId>{0, 1, 2, 3, 4});
  CHECK(spec.foreground_classes() == std::vector<ClassId>{1, 2, 3, 4, 5});

  ScenarioSpec bad = spec;
  bad.class_partition = {{1, 2}, {2}};
  CHECK_THROWS_AS(bad.validate(default_generator(5)), ContractViolation);
  bad.class_partition = {{0, 1}};
  CHECK_THROWS_AS(bad.validate(default_generator(5)), ContractViolation);
  bad.class_partition = {{1}, {7}};
  CHECK_THROWS_AS(bad.validate(default_generator(5)), ContractViolation);
}

TEST_CASE("session protocols hold on every preset") {
  const GeneratorConfig cfg = default_generator(5);
  for (const auto& name : kPresets) {
    for (const Setting setting : {Setting::Disjoint, Setting::Overlapped}) {
      ScenarioSpec spec = *scenario_preset(name);
      spec.setting = setting;
      spec.images_per_session = 25;
      spec.seed = 3;
      const auto sessions = build_sessions(spec, cfg);
      REQUIRE(std::ssize(sessions) == spec.sessions());
      for (const auto& s : sessions) {
        CHECK(std::ssize(s.items) == spec.images_per_session);
        const std::set<ClassId> current(s.current_classes.begin(), s.current_classes.end());
        const auto seen = spec.label_set(s.index);
        for (const auto& item : s.items) {
          bool novel = false;
          for (std::size_t px = 0; px < item.ground_truth.size(); ++px) {
            const ClassId g = item.ground_truth.labels[px], m = item.labels.labels[px];
            novel = novel || current.count(g);
            CHECK(m == (current.count(g) ? g : kBackground));
            if (setting == Setting::Disjoint)
              CHECK(std::find(seen.begin(), seen.end(), g) != seen.end());
          }
          CHECK(novel);
        }
      }
    }
  }
}

TEST_CASE("single-session scenario keeps full ground truth") {
  ScenarioSpec spec;
  spec.class_partition = {{1, 2, 3, 4, 5}};
  spec.images_per_session = 10;
  const auto sessions = build_sessions(spec, default_generator(5));
  REQUIRE(sessions.size() == 1u);
  for (const auto& item : sessions[0].items) CHECK(item.labels == item.ground_truth);
}

TEST_CASE("datasets are reproducible per seed and differ across seeds") {
  const GeneratorConfig cfg = default_generator(5);
  ScenarioSpec spec = *scenario_preset("3-2");
  spec.images_per_session = 8;
  spec.seed = 11;
  const auto a = build_sessions(spec, cfg);
  const auto b = build_sessions(spec, cfg);
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t n = 0; n < a[t].items.size(); ++n) {
      CHECK(a[t].items[n].image == b[t].items[n].image);
      CHECK(a[t].items[n].ground_truth == b[t].items[n].ground_truth);
    }
  spec.seed = 12;
  CHECK_FALSE(build_sessions(spec, cfg)[0].items[0].image == a[0].items[0].image);
  CHECK(build_test_set(spec, cfg, 2).size() == static_cast<std::size_t>(spec.test_images));
}

TEST_CASE("a partition naming a class outside the universe is rejected") {
  ScenarioSpec spec;
  spec.class_partition = {{1}, {3}};
  CHECK_THROWS_AS(build_sessions(spec, default_generator(2)), ContractViolation);
}

TEST_CASE("hue shift passes through to the pool generator") {
  const GeneratorConfig cfg = default_generator(5);
  const GeneratorConfig same = shifted_generator(cfg, AuxShift{});
  for (std::size_t k = 0; k < cfg.classes.size(); ++k) CHECK(same.classes[k].color == cfg.classes[k].color);

  const GeneratorConfig half = shifted_generator(cfg, AuxShift{0.5, {}});
  const Rgb red = half.find(1)->color;
  CHECK(red.r == doctest::Approx(0.15));
  CHECK(red.g == doctest::Approx(0.90));
  CHECK(red.b == doctest::Approx(0.90));
  const GeneratorConfig back = shifted_generator(half, AuxShift{0.5, {}});
  for (std::size_t k = 0; k < cfg.classes.size(); ++k) {
    CHECK(back.classes[k].color.r == doctest::Approx(cfg.classes[k].color.r).epsilon(1e-12));
    CHECK(back.classes[k].color.g == doctest::Approx(cfg.classes[k].color.g).epsilon(1e-12));
    CHECK(back.classes[k].color.b == doctest::Approx(cfg.classes[k].color.b).epsilon(1e-12));
  }

  const GeneratorConfig disks = shifted_generator(cfg, AuxShift{0.0, {Shape::Disk}});
  for (const auto& c : disks.classes) CHECK(c.shape == Shape::Disk);
}

TEST_CASE("auxiliary pools are sized and reproducible") {
  GeneratorConfig cfg = default_generator(5);
  cfg.seed = 4;
  const AuxiliaryPool a = build_aux_pool(cfg, 1000, AuxShift{});
  CHECK(a.images.size() == 1000u);
  const AuxiliaryPool b = build_aux_pool(cfg, 1000, AuxShift{});
  CHECK(a.images == b.images);
  // A smaller pool is a prefix of a larger one, so aux_fraction nests.
  const AuxiliaryPool small = build_aux_pool(cfg, 10, AuxShift{});
  CHECK(std::equal(small.images.begin(), small.images.end(), a.images.begin()));
  const AuxiliaryPool shifted = build_aux_pool(cfg, 5, AuxShift{0.5, {}});
  CHECK(shifted.shift.hue_shift == 0.5);
  CHECK_THROWS_AS(build_aux_pool(cfg, 0, AuxShift{}), ContractViolation);
}
