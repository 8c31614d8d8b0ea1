#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "stcis/config.hpp"
#include "stcis/error.hpp"

using namespace stcis;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
  try {
    RunConfig c = parse_config_text(text);
    c.resolve();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("defaults carry through to the method configuration") {
  RunConfig c = parse_config_text("{\"preset\": \"3-2\"}");
  c.resolve();
  CHECK(c.partition == std::vector<std::vector<ClassId>>{{1, 2, 3}, {4, 5}});
  CHECK(c.methods.size() == 5u);
  const MethodConfig mc = c.method_config(Method::STCRMS);
  CHECK(mc.lambda == 1.0);
  CHECK(mc.self_train_epochs == 1);
  CHECK(mc.first_task.learning_rate == 1e-2);
  CHECK(mc.later.learning_rate == 1e-3);
  CHECK(mc.aux_fraction == 1.0);
  CHECK(mc.include_background);
  CHECK(mc.aux_shift == AuxShift{});

  const MethodConfig plain;
  CHECK(mc.aux_pool_size == plain.aux_pool_size);
  CHECK(mc.first_task == plain.first_task);
  CHECK(mc.later == plain.later);
  CHECK(mc.hidden_dim == plain.hidden_dim);
}

TEST_CASE("values are applied and echoed") {
  RunConfig c = parse_config_text(R"({"preset": "4-1", "lambda": 5, "seeds": "1..3",
      "methods": ["FT", "ST+CR+MS"], "setting": "overlapped", "hue_shift": 0.5,
      "shape_vocabulary": ["disk"]})");
  c.resolve();
  CHECK(c.lambda == 5.0);
  CHECK(c.method_config(Method::STCRMS).lambda == 5.0);
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(c.methods == std::vector<Method>{Method::FT, Method::STCRMS});
  CHECK(c.setting == Setting::Overlapped);
  CHECK(c.method_config(Method::ST).aux_shift == AuxShift{0.5, {Shape::Disk}});

  const std::string echo = config_to_json(c);
  CHECK(echo.find("\"lambda\": 5.0") != std::string::npos);
  RunConfig again = parse_config_text(echo);
  again.resolve();
  CHECK(config_to_json(again) == echo);
}

TEST_CASE("every default survives the echo round trip") {
  RunConfig c;
  c.resolve();
  RunConfig again = parse_config_text(config_to_json(c));
  again.resolve();
  CHECK(config_to_json(again) == config_to_json(c));

  c.preset.clear();
  c.partition = {{1, 2}, {3}};
  c.resolve();
  CHECK(c.scenario_name() == "custom");
  RunConfig custom = parse_config_text(config_to_json(c));
  custom.resolve();
  CHECK(custom.partition == c.partition);
  CHECK(custom.generator().classes.size() == 3u);
}

TEST_CASE("a later key overrides the base") {
  RunConfig base;
  base.lambda = 3.0;
  base.seeds = {9};
  const RunConfig c = parse_config_text("{\"lambda\": 0.5}", base);
  CHECK(c.lambda == 0.5);
  CHECK(c.seeds == std::vector<std::uint64_t>{9});
  CHECK(parse_config_text("{\"partition\": [[1], [2]]}").preset.empty());
  CHECK(parse_config_text("{\"partition\": [[1], [2]], \"preset\": \"4-1\"}").partition.empty());
}

TEST_CASE("bad configs are rejected with a diagnostic naming the problem") {
  CHECK(error_of("{\"lamda\": 1}").find("'lamda'") != std::string::npos);
  CHECK(error_of("{\"lambda\": \"big\"}").find("'lambda'") != std::string::npos);
  CHECK(error_of("{\"preset\": \"19-1\"}").find("'19-1'") != std::string::npos);
  CHECK(error_of("{\"preset\": \"19-1\"}").find("3-2") != std::string::npos);
  CHECK(error_of("{\"methods\": [\"BEST\"]}").find("BEST") != std::string::npos);
  CHECK(error_of("{\"setting\": \"both\"}").find("'setting'") != std::string::npos);
  CHECK(error_of("{\"image_size\": 4}").find("'image_size'") != std::string::npos);
  CHECK(error_of("{\"partition\": [[1, 2], [2]]}") != "");
  CHECK(error_of("{\"partition\": [[1], [11]]}") != "");
  CHECK(error_of("{\"partition\": [[2, 1], [3]]}") != "");
  CHECK(error_of("{\"aux_fraction\": 0}") != "");
  CHECK(error_of("[1, 2]") != "");
  CHECK(error_of("{\"seeds\": []}").find("'seeds'") != std::string::npos);

  const std::string malformed = error_of("{\n  \"lambda\": 1,\n  \"seeds\": [1,,2]\n}");
  CHECK(malformed.find("line 3") != std::string::npos);
}

TEST_CASE("config files load from disk") {
  const fs::path dir = fs::temp_directory_path() / "stcis_test_config";
  fs::create_directories(dir);
  const fs::path path = dir / "c.json";
  std::ofstream(path) << "{\"preset\": \"3-1x2\", \"test_images\": 7}";
  const RunConfig c = load_config(path);
  CHECK(c.preset == "3-1x2");
  CHECK(c.test_images == 7);
  CHECK(c.scenario(4).seed == 4u);
  CHECK(c.scenario(4).test_images == 7);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
}

TEST_CASE("seed and method lists") {
  CHECK(parse_seed_list("1..5") == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  CHECK(parse_seed_list("3") == std::vector<std::uint64_t>{3});
  CHECK(parse_seed_list("1, 4,7") == std::vector<std::uint64_t>{1, 4, 7});
  CHECK_THROWS_AS(parse_seed_list("5..1"), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("x"), ConfigError);
  CHECK_THROWS_AS(parse_seed_list(""), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("-1"), ConfigError);

  CHECK(parse_method_list("FT,Joint") == std::vector<Method>{Method::FT, Method::Joint});
  CHECK(parse_method_list("ST+CR, ST") == std::vector<Method>{Method::STCR, Method::ST});
  CHECK_THROWS_AS(parse_method_list("FT,nope"), ConfigError);
  CHECK_THROWS_AS(parse_method_list(""), ConfigError);
}

TEST_CASE("output root prefers the flag, then the environment") {
  ::unsetenv(std::string(kOutputEnv).c_str());
  CHECK(resolve_output_root("") == fs::path("runs"));
  ::setenv(std::string(kOutputEnv).c_str(), "/tmp/from-env", 1);
  CHECK(resolve_output_root("") == fs::path("/tmp/from-env"));
  CHECK(resolve_output_root("mine") == fs::path("mine"));
  ::unsetenv(std::string(kOutputEnv).c_str());
}

TEST_CASE("sweep axes expand to one config per value") {
  RunConfig c;
  apply_sweep_spec("lambda", c);
  CHECK(c.sweep_axis == "lambda");
  CHECK(c.sweep_values == std::vector<double>{0.1, 0.5, 1.0, 5.0});
  CHECK(sweep_preset("self_train_epochs") == std::vector<double>{1, 5, 10, 20});
  c.resolve();

  const RunConfig point = c.at_sweep_point(5.0);
  CHECK(point.lambda == 5.0);
  CHECK(point.sweep_axis.empty());
  CHECK(point.method_config(Method::STCRMS).lambda == 5.0);
  CHECK(c.at_sweep_point(0.25).lambda == 0.25);

  apply_sweep_spec("hue_shift=0, 0.5", c);
  c.resolve();
  CHECK(c.sweep_values == std::vector<double>{0.0, 0.5});
  CHECK(c.at_sweep_point(0.5).method_config(Method::ST).aux_shift.hue_shift == 0.5);
  CHECK(c.at_sweep_point(0.5).hue_shift == 0.5);

  RunConfig again = parse_config_text(config_to_json(c));
  again.resolve();
  CHECK(again.sweep_axis == "hue_shift");
  CHECK(config_to_json(again) == config_to_json(c));
  CHECK(config_to_json(c.at_sweep_point(0.5)).find("sweep") == std::string::npos);

  RunConfig epochs;
  apply_sweep_spec("self_train_epochs=1,3", epochs);
  epochs.resolve();
  CHECK(epochs.at_sweep_point(3).method_config(Method::ST).self_train_epochs == 3);
}

TEST_CASE("bad sweeps are rejected") {
  CHECK(error_of("{\"sweep\": {\"depth\": [1, 2]}}").find("depth") != std::string::npos);
  CHECK(error_of("{\"sweep\": {\"lambda\": []}}").find("'sweep'") != std::string::npos);
  CHECK(error_of("{\"sweep\": {\"lambda\": [1], \"hue_shift\": [0]}}").find("'sweep'") != std::string::npos);
  CHECK(error_of("{\"sweep\": {\"self_train_epochs\": [1.5]}}") != "");
  CHECK(error_of("{\"sweep\": {\"aux_fraction\": [0.5, 0]}}") != "");
  CHECK(error_of("{\"sweep\": [0.1]}").find("'sweep'") != std::string::npos);
  RunConfig c;
  CHECK_THROWS_AS(apply_sweep_spec("depth", c), ConfigError);
  CHECK_THROWS_AS(apply_sweep_spec("lambda=1,x", c), ConfigError);
}
