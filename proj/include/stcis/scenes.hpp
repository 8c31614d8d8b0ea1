#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stcis/image.hpp"
#include "stcis/rng.hpp"

namespace stcis {

enum class Shape { Disk, Square, Triangle, Cross, Ring };

std::string_view to_string(Shape shape);
std::optional<Shape> parse_shape(std::string_view name);

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  bool operator==(const Rgb&) const = default;
};

// Rotates the hue of `color` by `turns` (1.0 = full circle).
Rgb rotate_hue(Rgb color, double turns);

struct ClassStyle {
  ClassId id = 0;
  std::string name;
  Shape shape = Shape::Disk;
  Rgb color;
};

struct GeneratorConfig {
  int h = 48;
  int w = 48;
  std::vector<ClassStyle> classes;  // foreground classes only
  int min_objects = 1;
  int max_objects = 3;
  int min_size = 6;  // shape half-extent in pixels
  int max_size = 12;
  double noise = 0.06;         // per-pixel uniform noise amplitude
  double color_jitter = 0.08;  // per-object uniform color offset amplitude
  double background_lo = 0.25;
  double background_hi = 0.6;
  std::uint64_t seed = 0;  // drives auxiliary pools

  const ClassStyle* find(ClassId id) const;
  std::vector<ClassId> class_ids() const;
  void validate() const;
};

// The shipped class palette: up to 10 foreground classes, five shapes.
GeneratorConfig default_generator(int num_classes = 5);

// A shape as placed on the canvas; centre in pixel coordinates.
struct Placement {
  ClassId id = 0;
  Shape shape = Shape::Disk;
  int ci = 0;
  int cj = 0;
  int size = 0;
};

// True when pixel (i, j) lies in the shape's extent.
bool shape_contains(const Placement& placement, int i, int j);

struct Scene {
  SceneImage image;
  LabelMap labels;
  std::vector<Placement> placements;  // in drawing order
};

// Draws 1..max_objects shapes of the allowed classes; later shapes occlude
// earlier ones and the label map records the visible class.
Scene generate_scene(const GeneratorConfig& cfg, const std::vector<ClassId>& allowed_classes,
                     Rng& rng);

// Keeps labels in `current_classes`, maps every other label to background.
LabelMap mask_labels(const LabelMap& gt, const std::vector<ClassId>& current_classes);

enum class Setting { Disjoint, Overlapped };
std::string_view to_string(Setting setting);
std::optional<Setting> parse_setting(std::string_view name);

struct ScenarioSpec {
  std::string name;
  std::vector<std::vector<ClassId>> class_partition;
  Setting setting = Setting::Disjoint;
  int images_per_session = 60;
  int test_images = 40;
  std::uint64_t seed = 0;

  std::vector<ClassId> foreground_classes() const;
  // {0} ∪ C^1 ∪ ... ∪ C^t, ascending (t is 1-based).
  std::vector<ClassId> label_set(int t) const;
  int sessions() const { return static_cast<int>(class_partition.size()); }
  void validate(const GeneratorConfig& cfg) const;
};

// Presets "4-1", "3-2" and "3-1x2" (also spelled "3-1×2").
std::optional<ScenarioSpec> scenario_preset(std::string_view name);
std::vector<std::string> preset_names();

struct SessionItem {
  SceneImage image;
  LabelMap labels;        // after masking
  LabelMap ground_truth;  // before masking
};

struct SessionDataset {
  int index = 1;  // 1-based session index t
  std::vector<ClassId> current_classes;
  std::vector<ClassId> label_set;
  std::vector<SessionItem> items;
};

std::vector<SessionDataset> build_sessions(const ScenarioSpec& spec, const GeneratorConfig& cfg);

// Fully labelled evaluation scenes over the classes seen up to session t.
std::vector<SessionItem> build_test_set(const ScenarioSpec& spec, const GeneratorConfig& cfg,
                                        int t);

struct AuxShift {
  double hue_shift = 0.0;
  std::vector<Shape> shape_vocabulary;  // empty: keep every class's shape

  bool operator==(const AuxShift&) const = default;
};

struct AuxiliaryPool {
  std::vector<SceneImage> images;
  AuxShift shift;
};

// Applies a shift to the class palette; used for auxiliary pools.
GeneratorConfig shifted_generator(const GeneratorConfig& cfg, const AuxShift& shift);

AuxiliaryPool build_aux_pool(const GeneratorConfig& cfg, int size, const AuxShift& shift);

}  // namespace stcis
