#include "stcis/scenes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "stcis/error.hpp"

namespace stcis {

namespace {

constexpr std::array<std::pair<Shape, std::string_view>, 5> kShapeNames{{
    {Shape::Disk, "disk"},
    {Shape::Square, "square"},
    {Shape::Triangle, "triangle"},
    {Shape::Cross, "cross"},
    {Shape::Ring, "ring"},
}};

bool contains_class(const std::vector<ClassId>& classes, ClassId id) {
  return std::find(classes.begin(), classes.end(), id) != classes.end();
}

bool has_any_pixel_of(const LabelMap& map, const std::vector<ClassId>& classes) {
  return std::any_of(map.labels.begin(), map.labels.end(),
                     [&](ClassId id) { return contains_class(classes, id); });
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

std::string_view to_string(Shape shape) {
  for (const auto& [s, name] : kShapeNames)
    if (s == shape) return name;
  return "unknown";
}

std::optional<Shape> parse_shape(std::string_view name) {
  for (const auto& [s, n] : kShapeNames)
    if (n == name) return s;
  return std::nullopt;
}

Rgb rotate_hue(Rgb color, double turns) {
  const double mx = std::max({color.r, color.g, color.b});
  const double mn = std::min({color.r, color.g, color.b});
  const double delta = mx - mn;
  if (delta <= 0.0 || turns == std::floor(turns)) return color;
  double hue;
  if (mx == color.r)
    hue = std::fmod((color.g - color.b) / delta, 6.0);
  else if (mx == color.g)
    hue = (color.b - color.r) / delta + 2.0;
  else
    hue = (color.r - color.g) / delta + 4.0;
  hue /= 6.0;
  hue = hue + turns;
  hue -= std::floor(hue);

  const double s = delta / mx, v = mx;
  const double h6 = hue * 6.0;
  const int sector = static_cast<int>(std::floor(h6)) % 6;
  const double f = h6 - std::floor(h6);
  const double p = v * (1.0 - s), q = v * (1.0 - s * f), t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

const ClassStyle* GeneratorConfig::find(ClassId id) const {
  for (const auto& style : classes)
    if (style.id == id) return &style;
  return nullptr;
}

std::vector<ClassId> GeneratorConfig::class_ids() const {
  std::vector<ClassId> ids;
  for (const auto& style : classes) ids.push_back(style.id);
  return ids;
}

void GeneratorConfig::validate() const {
  require(h > 0 && w > 0, "GeneratorConfig: canvas must be non-empty");
  require(!classes.empty(), "GeneratorConfig: empty class universe");
  require(min_objects >= 1 && max_objects >= min_objects,
          "GeneratorConfig: objects_per_image range invalid");
  require(min_size >= 1 && max_size >= min_size, "GeneratorConfig: size range invalid");
  require(noise >= 0.0 && color_jitter >= 0.0, "GeneratorConfig: negative noise");
  std::set<ClassId> ids;
  for (const auto& style : classes) {
    require(style.id > kBackground, "GeneratorConfig: class ids must be positive");
    require(ids.insert(style.id).second, "GeneratorConfig: duplicate class id");
    for (const auto& other : classes)
      if (&other != &style)
        require(!(other.shape == style.shape && other.color == style.color),
                "GeneratorConfig: class -> (shape, color) mapping must be injective");
  }
}

GeneratorConfig default_generator(int num_classes) {
  // The first five classes sit in the red..green half of the hue circle, so
  // a half-turn hue shift moves every object colour away from the palette.
  // Classes 4 and 5 resemble 1 and 2, so an old model tends to mistake a
  // new object for a similar old class.
  static const std::array<ClassStyle, 10> palette{{
      {1, "red-disk", Shape::Disk, {0.90, 0.15, 0.15}},
      {2, "green-square", Shape::Square, {0.20, 0.80, 0.20}},
      {3, "yellow-triangle", Shape::Triangle, {0.90, 0.85, 0.15}},
      {4, "orange-cross", Shape::Cross, {0.95, 0.50, 0.10}},
      {5, "lime-ring", Shape::Ring, {0.55, 0.85, 0.15}},
      {6, "blue-disk", Shape::Disk, {0.20, 0.30, 0.90}},
      {7, "magenta-square", Shape::Square, {0.85, 0.20, 0.80}},
      {8, "purple-triangle", Shape::Triangle, {0.50, 0.20, 0.85}},
      {9, "white-cross", Shape::Cross, {0.95, 0.95, 0.95}},
      {10, "teal-ring", Shape::Ring, {0.10, 0.75, 0.70}},
  }};
  require(num_classes >= 1 && num_classes <= static_cast<int>(palette.size()),
          "default_generator: between 1 and 10 foreground classes");
  GeneratorConfig cfg;
  cfg.classes.assign(palette.begin(), palette.begin() + num_classes);
  return cfg;
}

bool shape_contains(const Placement& p, int i, int j) {
  const double di = i - p.ci, dj = j - p.cj, r = p.size;
  const double d2 = di * di + dj * dj;
  switch (p.shape) {
    case Shape::Disk:
      return d2 <= r * r;
    case Shape::Square:
      return std::abs(di) <= r && std::abs(dj) <= r;
    case Shape::Triangle:
      // Apex at the top row, base at the bottom row.
      return di >= -r && di <= r && std::abs(dj) <= (di + r) / 2.0;
    case Shape::Cross: {
      const double arm = r / 3.0;
      return (std::abs(di) <= arm && std::abs(dj) <= r) ||
             (std::abs(dj) <= arm && std::abs(di) <= r);
    }
    case Shape::Ring:
      return d2 <= r * r && d2 >= 0.25 * r * r;
  }
  return false;
}

Scene generate_scene(const GeneratorConfig& cfg, const std::vector<ClassId>& allowed_classes,
                     Rng& rng) {
  require(!allowed_classes.empty(), "generate_scene: allowed_classes is empty");
  for (const ClassId id : allowed_classes)
    require(cfg.find(id) != nullptr,
            "generate_scene: class " + std::to_string(id) + " not in the universe");

  Scene scene{SceneImage(cfg.h, cfg.w), LabelMap(cfg.h, cfg.w), {}};
  const double level = rng.uniform(cfg.background_lo, cfg.background_hi);
  for (double& v : scene.image.pixels) v = clamp01(level + rng.uniform(-cfg.noise, cfg.noise));

  const int max_fit = std::max(1, (std::min(cfg.h, cfg.w) - 1) / 2);
  const int objects = static_cast<int>(rng.integer(cfg.min_objects, cfg.max_objects));
  for (int n = 0; n < objects; ++n) {
    const ClassId id =
        allowed_classes[static_cast<std::size_t>(rng.integer(0, std::ssize(allowed_classes) - 1))];
    const ClassStyle& style = *cfg.find(id);
    const int size = std::min(static_cast<int>(rng.integer(cfg.min_size, cfg.max_size)), max_fit);
    Placement p{id, style.shape, static_cast<int>(rng.integer(size, cfg.h - 1 - size)),
                static_cast<int>(rng.integer(size, cfg.w - 1 - size)), size};
    const Rgb base{clamp01(style.color.r + rng.uniform(-cfg.color_jitter, cfg.color_jitter)),
                   clamp01(style.color.g + rng.uniform(-cfg.color_jitter, cfg.color_jitter)),
                   clamp01(style.color.b + rng.uniform(-cfg.color_jitter, cfg.color_jitter))};
    for (int i = p.ci - size; i <= p.ci + size; ++i) {
      for (int j = p.cj - size; j <= p.cj + size; ++j) {
        if (!shape_contains(p, i, j)) continue;
        scene.image.at(i, j, 0) = clamp01(base.r + rng.uniform(-cfg.noise, cfg.noise));
        scene.image.at(i, j, 1) = clamp01(base.g + rng.uniform(-cfg.noise, cfg.noise));
        scene.image.at(i, j, 2) = clamp01(base.b + rng.uniform(-cfg.noise, cfg.noise));
        scene.labels.at(i, j) = id;
      }
    }
    scene.placements.push_back(p);
  }
  return scene;
}

LabelMap mask_labels(const LabelMap& gt, const std::vector<ClassId>& current_classes) {
  LabelMap out = gt;
  for (ClassId& id : out.labels)
    if (!contains_class(current_classes, id)) id = kBackground;
  return out;
}

std::string_view to_string(Setting setting) {
  return setting == Setting::Disjoint ? "disjoint" : "overlapped";
}

std::optional<Setting> parse_setting(std::string_view name) {
  if (name == "disjoint") return Setting::Disjoint;
  if (name == "overlapped") return Setting::Overlapped;
  return std::nullopt;
}

std::vector<ClassId> ScenarioSpec::foreground_classes() const {
  const auto all = label_set(sessions());
  return std::vector<ClassId>(all.begin() + 1, all.end());
}

std::vector<ClassId> ScenarioSpec::label_set(int t) const {
  std::vector<ClassId> ids{kBackground};
  for (int s = 0; s < t && s < sessions(); ++s)
    ids.insert(ids.end(), class_partition[s].begin(), class_partition[s].end());
  std::sort(ids.begin(), ids.end());
  return ids;
}

void ScenarioSpec::validate(const GeneratorConfig& cfg) const {
  require(!class_partition.empty(), "ScenarioSpec: no sessions");
  require(images_per_session >= 1, "ScenarioSpec: images_per_session must be positive");
  require(test_images >= 1, "ScenarioSpec: test_images must be positive");
  ClassId last = kBackground;
  for (const auto& session : class_partition) {
    require(!session.empty(), "ScenarioSpec: empty class set in partition");
    for (const ClassId id : session) {
      require(id != kBackground, "ScenarioSpec: background cannot be a session class");
      require(id > last,
              "ScenarioSpec: partition must list distinct classes in increasing order");
      require(cfg.find(id) != nullptr,
              "ScenarioSpec: class " + std::to_string(id) + " not in the generator universe");
      last = id;
    }
  }
}

std::optional<ScenarioSpec> scenario_preset(std::string_view name) {
  ScenarioSpec spec;
  if (name == "4-1") {
    spec.class_partition = {{1, 2, 3, 4}, {5}};
  } else if (name == "3-2") {
    spec.class_partition = {{1, 2, 3}, {4, 5}};
  } else if (name == "3-1x2" || name == "3-1×2") {
    spec.class_partition = {{1, 2, 3}, {4}, {5}};
  } else {
    return std::nullopt;
  }
  spec.name = name == "3-1×2" ? "3-1x2" : std::string(name);
  return spec;
}

std::vector<std::string> preset_names() { return {"4-1", "3-2", "3-1x2"}; }

std::vector<SessionDataset> build_sessions(const ScenarioSpec& spec, const GeneratorConfig& cfg) {
  cfg.validate();
  spec.validate(cfg);
  const std::vector<ClassId> universe = spec.foreground_classes();
  std::vector<SessionDataset> sessions;
  for (int t = 1; t <= spec.sessions(); ++t) {
    SessionDataset session;
    session.index = t;
    session.current_classes = spec.class_partition[t - 1];
    session.label_set = spec.label_set(t);
    const std::vector<ClassId> allowed =
        spec.setting == Setting::Disjoint
            ? std::vector<ClassId>(session.label_set.begin() + 1, session.label_set.end())
            : universe;

    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(t)));
    const int budget = 10 * spec.images_per_session;
    int attempts = 0;
    while (std::ssize(session.items) < spec.images_per_session) {
      if (attempts++ >= budget)
        throw GenerationExhausted("session " + std::to_string(t) + ": only " +
                                  std::to_string(session.items.size()) + " of " +
                                  std::to_string(spec.images_per_session) +
                                  " images contain a novel-class pixel after " +
                                  std::to_string(budget) + " attempts");
      Scene scene = generate_scene(cfg, allowed, rng);
      if (!has_any_pixel_of(scene.labels, session.current_classes)) continue;
      LabelMap masked = mask_labels(scene.labels, session.current_classes);
      session.items.push_back({std::move(scene.image), std::move(masked), std::move(scene.labels)});
    }
    sessions.push_back(std::move(session));
  }
  return sessions;
}

std::vector<SessionItem> build_test_set(const ScenarioSpec& spec, const GeneratorConfig& cfg,
                                        int t) {
  spec.validate(cfg);
  require(t >= 1 && t <= spec.sessions(), "build_test_set: session index out of range");
  const auto seen = spec.label_set(t);
  const std::vector<ClassId> allowed(seen.begin() + 1, seen.end());
  Rng rng(derive_seed(spec.seed, streams::kTestSet + static_cast<std::uint64_t>(t)));
  std::vector<SessionItem> items;
  for (int n = 0; n < spec.test_images; ++n) {
    Scene scene = generate_scene(cfg, allowed, rng);
    items.push_back({std::move(scene.image), scene.labels, scene.labels});
  }
  return items;
}

GeneratorConfig shifted_generator(const GeneratorConfig& cfg, const AuxShift& shift) {
  GeneratorConfig out = cfg;
  for (auto& style : out.classes) {
    style.color = rotate_hue(style.color, shift.hue_shift);
    const auto& vocab = shift.shape_vocabulary;
    if (!vocab.empty() && std::find(vocab.begin(), vocab.end(), style.shape) == vocab.end())
      style.shape = vocab[static_cast<std::size_t>(style.id - 1) % vocab.size()];
  }
  return out;
}

AuxiliaryPool build_aux_pool(const GeneratorConfig& cfg, int size, const AuxShift& shift) {
  require(size >= 1, "build_aux_pool: size must be at least 1");
  const GeneratorConfig shifted = shifted_generator(cfg, shift);
  const std::vector<ClassId> universe = shifted.class_ids();
  Rng rng(derive_seed(cfg.seed, streams::kAuxPool));
  AuxiliaryPool pool;
  pool.shift = shift;
  pool.images.reserve(static_cast<std::size_t>(size));
  for (int n = 0; n < size; ++n) pool.images.push_back(generate_scene(shifted, universe, rng).image);
  return pool;
}

}  // namespace stcis
