#include "stcis/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "stcis/error.hpp"

namespace stcis {

using nlohmann::json;

namespace {

template <typename T>
T get_as(const json& value, const std::string& key, const char* expected) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "': expected " + expected);
  }
}

std::vector<Method> methods_from(const json& value, const std::string& key) {
  if (value.is_string()) return parse_method_list(value.get<std::string>());
  std::vector<Method> out;
  for (const auto& name : get_as<std::vector<std::string>>(value, key, "method names")) {
    const auto m = parse_method(name);
    if (!m) throw ConfigError("config key '" + key + "': unknown method '" + name + "'");
    out.push_back(*m);
  }
  return out;
}

std::vector<std::uint64_t> seeds_from(const json& value, const std::string& key) {
  if (value.is_string()) return parse_seed_list(value.get<std::string>());
  if (value.is_number_unsigned()) return {value.get<std::uint64_t>()};
  return get_as<std::vector<std::uint64_t>>(value, key, "a seed list");
}

std::vector<Shape> shapes_from(const json& value, const std::string& key) {
  std::vector<Shape> out;
  for (const auto& name : get_as<std::vector<std::string>>(value, key, "shape names")) {
    const auto s = parse_shape(name);
    if (!s) throw ConfigError("config key '" + key + "': unknown shape '" + name + "'");
    out.push_back(*s);
  }
  return out;
}

int line_of(std::string_view text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(end), '\n'));
}

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ConfigError("bad seed '" + std::string(s) + "'");
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

}  // namespace

std::string RunConfig::scenario_name() const { return preset.empty() ? "custom" : preset; }

ScenarioSpec RunConfig::scenario(std::uint64_t seed) const {
  ScenarioSpec spec;
  spec.name = scenario_name();
  spec.class_partition = partition;
  spec.setting = setting;
  spec.images_per_session = images_per_session;
  spec.test_images = test_images;
  spec.seed = seed;
  return spec;
}

GeneratorConfig RunConfig::generator() const {
  ClassId top = 1;
  for (const auto& s : partition)
    for (const ClassId id : s) top = std::max(top, id);
  GeneratorConfig gen = default_generator(top);
  gen.h = gen.w = image_size;
  gen.noise = noise;
  gen.color_jitter = color_jitter;
  return gen;
}

MethodConfig RunConfig::method_config(Method method) const {
  MethodConfig mc;
  mc.method = method;
  mc.lambda = lambda;
  mc.aux_fraction = aux_fraction;
  mc.aux_pool_size = aux_pool_size;
  mc.aux_shift = AuxShift{hue_shift, shape_vocabulary};
  mc.self_train_epochs = self_train_epochs;
  mc.hidden_dim = hidden_dim;
  mc.first_task = TrainConfig{first_lr, first_epochs, 0.0, batch_pixels, 0};
  mc.later = TrainConfig{later_lr, later_epochs, 0.0, batch_pixels, 0};
  mc.ms_everywhere = ms_everywhere;
  mc.zero_init_joint = zero_init_joint;
  mc.include_background = include_background;
  return mc;
}

void RunConfig::resolve() {
  if (!preset.empty()) {
    const auto spec = scenario_preset(preset);
    if (!spec) {
      std::string known;
      for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
      throw ConfigError("unknown preset '" + preset + "' (known: " + known + ")");
    }
    partition = spec->class_partition;
  }
  if (partition.empty()) throw ConfigError("config needs a preset or a partition");
  if (methods.empty()) throw ConfigError("config key 'methods': empty");
  if (seeds.empty()) throw ConfigError("config key 'seeds': empty");
  if (image_size < 8) throw ConfigError("config key 'image_size': must be at least 8");
  if (probe_images < 0) throw ConfigError("config key 'probe_images': must be non-negative");
  try {
    ClassId top = 0;
    for (const auto& s : partition)
      for (const ClassId id : s) top = std::max(top, id);
    if (top > 10) throw ConfigError("config key 'partition': class ids must be at most 10");
    const GeneratorConfig gen = generator();
    gen.validate();
    scenario(seeds.front()).validate(gen);
    for (const Method m : methods) method_config(m).validate();
    if (!sweep_axis.empty()) {
      const auto& axes = sweep_axes();
      if (std::find(axes.begin(), axes.end(), sweep_axis) == axes.end())
        throw ConfigError("config key 'sweep': unknown axis '" + sweep_axis + "'");
      if (sweep_values.empty()) throw ConfigError("config key 'sweep': no values");
      for (const double v : sweep_values) {
        if (sweep_axis == "self_train_epochs" && (v != std::floor(v) || v < 1.0 || v > 1e6))
          throw ConfigError("config key 'sweep': self_train_epochs values must be positive integers");
        const RunConfig point = at_sweep_point(v);
        for (const Method m : methods) point.method_config(m).validate();
      }
    }
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
}

RunConfig RunConfig::at_sweep_point(double value) const {
  RunConfig c = *this;
  if (sweep_axis == "lambda") c.lambda = value;
  else if (sweep_axis == "aux_fraction") c.aux_fraction = value;
  else if (sweep_axis == "self_train_epochs") c.self_train_epochs = static_cast<int>(value);
  else if (sweep_axis == "hue_shift") c.hue_shift = value;
  else throw ConfigError("unknown sweep axis '" + sweep_axis + "'");
  c.sweep_axis.clear();
  c.sweep_values.clear();
  return c;
}

const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> axes{"lambda", "aux_fraction", "self_train_epochs", "hue_shift"};
  return axes;
}

std::vector<double> sweep_preset(std::string_view axis) {
  if (axis == "lambda") return {0.1, 0.5, 1.0, 5.0};
  if (axis == "aux_fraction") return {0.01, 0.05, 0.1, 0.25, 0.5, 1.0};
  if (axis == "self_train_epochs") return {1, 5, 10, 20};
  if (axis == "hue_shift") return {0.0, 0.125, 0.25, 0.5};
  throw ConfigError("unknown sweep axis '" + std::string(axis) + "'");
}

void apply_sweep_spec(std::string_view text, RunConfig& config) {
  text = trim(text);
  const auto eq = text.find('=');
  const std::string axis(trim(text.substr(0, eq)));
  std::vector<double> values;
  if (eq == std::string_view::npos) {
    values = sweep_preset(axis);
  } else {
    std::string_view rest = text.substr(eq + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string item(trim(rest.substr(0, comma)));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || ptr != item.data() + item.size() || item.empty())
        throw ConfigError("--sweep: bad value '" + item + "'");
      values.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }
  config.sweep_axis = axis;
  config.sweep_values = std::move(values);
}

RunConfig parse_config_text(std::string_view text, RunConfig base) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error at line " + std::to_string(line_of(text, e.byte)) +
                      ": " + e.what());
  }
  if (doc.is_null()) return base;
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  RunConfig& c = base;
  for (const auto& [key, value] : doc.items()) {
    if (key == "preset") {
      c.preset = get_as<std::string>(value, key, "a string");
      c.partition.clear();
    } else if (key == "partition") {
      c.partition = get_as<std::vector<std::vector<ClassId>>>(value, key, "a list of id lists");
      c.preset.clear();
    } else if (key == "setting") {
      const auto s = parse_setting(get_as<std::string>(value, key, "a string"));
      if (!s) throw ConfigError("config key 'setting': expected disjoint or overlapped");
      c.setting = *s;
    } else if (key == "methods") {
      c.methods = methods_from(value, key);
    } else if (key == "seeds") {
      c.seeds = seeds_from(value, key);
    } else if (key == "lambda") {
      c.lambda = get_as<double>(value, key, "a number");
    } else if (key == "aux_fraction") {
      c.aux_fraction = get_as<double>(value, key, "a number");
    } else if (key == "aux_pool_size") {
      c.aux_pool_size = get_as<int>(value, key, "an integer");
    } else if (key == "hue_shift") {
      c.hue_shift = get_as<double>(value, key, "a number");
    } else if (key == "shape_vocabulary") {
      c.shape_vocabulary = shapes_from(value, key);
    } else if (key == "self_train_epochs") {
      c.self_train_epochs = get_as<int>(value, key, "an integer");
    } else if (key == "first_lr") {
      c.first_lr = get_as<double>(value, key, "a number");
    } else if (key == "later_lr") {
      c.later_lr = get_as<double>(value, key, "a number");
    } else if (key == "first_epochs") {
      c.first_epochs = get_as<int>(value, key, "an integer");
    } else if (key == "later_epochs") {
      c.later_epochs = get_as<int>(value, key, "an integer");
    } else if (key == "batch_pixels") {
      c.batch_pixels = get_as<std::size_t>(value, key, "a positive integer");
    } else if (key == "hidden_dim") {
      c.hidden_dim = get_as<std::size_t>(value, key, "a positive integer");
    } else if (key == "ms_everywhere") {
      c.ms_everywhere = get_as<bool>(value, key, "a boolean");
    } else if (key == "zero_init_joint") {
      c.zero_init_joint = get_as<bool>(value, key, "a boolean");
    } else if (key == "include_background") {
      c.include_background = get_as<bool>(value, key, "a boolean");
    } else if (key == "images_per_session") {
      c.images_per_session = get_as<int>(value, key, "an integer");
    } else if (key == "test_images") {
      c.test_images = get_as<int>(value, key, "an integer");
    } else if (key == "image_size") {
      c.image_size = get_as<int>(value, key, "an integer");
    } else if (key == "noise") {
      c.noise = get_as<double>(value, key, "a number");
    } else if (key == "color_jitter") {
      c.color_jitter = get_as<double>(value, key, "a number");
    } else if (key == "output_dir") {
      c.output_dir = get_as<std::string>(value, key, "a string");
    } else if (key == "dump_probes") {
      c.dump_probes = get_as<bool>(value, key, "a boolean");
    } else if (key == "probe_images") {
      c.probe_images = get_as<int>(value, key, "an integer");
    } else if (key == "sweep") {
      const auto axes = get_as<std::map<std::string, std::vector<double>>>(value, key,
                                                                          "an object {axis: [values]}");
      if (axes.size() > 1) throw ConfigError("config key 'sweep': at most one axis");
      c.sweep_axis.clear();
      c.sweep_values.clear();
      for (const auto& [axis, values] : axes) {
        c.sweep_axis = axis;
        c.sweep_values = values;
      }
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), std::move(base));
}

std::string config_to_json(const RunConfig& c) {
  json doc = json::object();
  if (!c.preset.empty())
    doc["preset"] = c.preset;
  else
    doc["partition"] = c.partition;
  doc["setting"] = std::string(to_string(c.setting));
  std::vector<std::string> methods;
  for (const Method m : c.methods) methods.emplace_back(to_string(m));
  doc["methods"] = methods;
  doc["seeds"] = c.seeds;
  doc["lambda"] = c.lambda;
  doc["aux_fraction"] = c.aux_fraction;
  doc["aux_pool_size"] = c.aux_pool_size;
  doc["hue_shift"] = c.hue_shift;
  std::vector<std::string> shapes;
  for (const Shape s : c.shape_vocabulary) shapes.emplace_back(to_string(s));
  doc["shape_vocabulary"] = shapes;
  doc["self_train_epochs"] = c.self_train_epochs;
  doc["first_lr"] = c.first_lr;
  doc["later_lr"] = c.later_lr;
  doc["first_epochs"] = c.first_epochs;
  doc["later_epochs"] = c.later_epochs;
  doc["batch_pixels"] = c.batch_pixels;
  doc["hidden_dim"] = c.hidden_dim;
  doc["ms_everywhere"] = c.ms_everywhere;
  doc["zero_init_joint"] = c.zero_init_joint;
  doc["include_background"] = c.include_background;
  doc["images_per_session"] = c.images_per_session;
  doc["test_images"] = c.test_images;
  doc["image_size"] = c.image_size;
  doc["noise"] = c.noise;
  doc["color_jitter"] = c.color_jitter;
  doc["output_dir"] = c.output_dir;
  doc["dump_probes"] = c.dump_probes;
  doc["probe_images"] = c.probe_images;
  if (!c.sweep_axis.empty()) doc["sweep"] = {{c.sweep_axis, c.sweep_values}};
  return doc.dump(2) + "\n";
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  text = trim(text);
  std::vector<std::uint64_t> seeds;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const std::uint64_t lo = parse_u64(trim(text.substr(0, dots)));
    const std::uint64_t hi = parse_u64(trim(text.substr(dots + 2)));
    if (hi < lo) throw ConfigError("bad seed range '" + std::string(text) + "'");
    if (hi - lo >= 10000) throw ConfigError("seed range too long");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  while (!text.empty()) {
    const auto comma = text.find(',');
    seeds.push_back(parse_u64(trim(text.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

std::vector<Method> parse_method_list(std::string_view text) {
  std::vector<Method> methods;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view name = trim(text.substr(0, comma));
    const auto m = parse_method(name);
    if (!m) throw ConfigError("unknown method '" + std::string(name) + "'");
    methods.push_back(*m);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (methods.empty()) throw ConfigError("empty method list");
  return methods;
}

std::filesystem::path resolve_output_root(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv(std::string(kOutputEnv).c_str()); env && *env) return env;
  return "runs";
}

}  // namespace stcis
