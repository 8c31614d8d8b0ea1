#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stcis/continual.hpp"
#include "stcis/scenes.hpp"

namespace stcis {

// Everything `run` needs. Config files are JSON objects whose keys are the
// field names below; see README.md for the documented key set.
struct RunConfig {
  std::string preset = "3-2";                      // empty when `partition` is given
  std::vector<std::vector<ClassId>> partition;     // resolved from the preset otherwise
  Setting setting = Setting::Disjoint;
  std::vector<Method> methods{Method::FT, Method::Joint, Method::ST, Method::STCR,
                              Method::STCRMS};
  std::vector<std::uint64_t> seeds{1};

  double lambda = 1.0;
  double aux_fraction = 1.0;
  int aux_pool_size = 400;
  double hue_shift = 0.0;
  std::vector<Shape> shape_vocabulary;
  int self_train_epochs = 1;

  double first_lr = 1e-2;
  double later_lr = 1e-3;
  int first_epochs = 10;
  int later_epochs = 40;
  std::size_t batch_pixels = 16;
  std::size_t hidden_dim = kDefaultHiddenDim;
  bool ms_everywhere = false;
  bool zero_init_joint = false;
  bool include_background = true;

  int images_per_session = 60;
  int test_images = 40;
  int image_size = 48;
  double noise = 0.06;
  double color_jitter = 0.08;

  std::string output_dir;  // empty: $STCIS_OUT, then "runs"
  bool dump_probes = false;
  int probe_images = 4;

  // Optional ablation axis: every method runs once per value.
  std::string sweep_axis;  // empty: no sweep
  std::vector<double> sweep_values;

  std::string scenario_name() const;
  ScenarioSpec scenario(std::uint64_t seed) const;
  GeneratorConfig generator() const;
  MethodConfig method_config(Method method) const;
  // Fills `partition` from the preset and checks every field.
  void resolve();
  // This config with the sweep axis set to `value` and the sweep removed.
  RunConfig at_sweep_point(double value) const;
};

inline constexpr std::string_view kOutputEnv = "STCIS_OUT";

// Applies the keys of a JSON object on top of `base`. Unknown keys and
// ill-typed values raise ConfigError naming the key; malformed text raises
// ConfigError with the line number.
RunConfig parse_config_text(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

// Every field as JSON; feeding the result back to parse_config_text yields
// the same config.
std::string config_to_json(const RunConfig& config);

// "1..5", "3" or "1,4,7".
std::vector<std::uint64_t> parse_seed_list(std::string_view text);
// Comma-separated method names.
std::vector<Method> parse_method_list(std::string_view text);

// Axes a sweep may vary: lambda, aux_fraction, self_train_epochs, hue_shift.
const std::vector<std::string>& sweep_axes();
// Default grid for an axis, e.g. lambda -> {0.1, 0.5, 1, 5}.
std::vector<double> sweep_preset(std::string_view axis);
// "lambda" (preset grid) or "lambda=0.5,1,2".
void apply_sweep_spec(std::string_view text, RunConfig& config);

// Flag value if set, else the environment variable, else "runs".
std::filesystem::path resolve_output_root(const std::string& flag_value);

}  // namespace stcis
