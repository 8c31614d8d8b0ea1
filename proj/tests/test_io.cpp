#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "stcis/error.hpp"
#include "stcis/io.hpp"
#include "support.hpp"

using namespace stcis;
using namespace stcis::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "stcis_test_io";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("checkpoint round trip is bit exact") {
  ModelParams p = random_params({0, 2, 3, 7}, 42, 5, 3.0);
  p.w1[0] = 1.0 / 3.0;
  p.b2[1] = -0.0;
  p.b2[2] = 5e-324;
  p.w2[3] = 1.7976931348623157e308;
  const fs::path path = scratch("round.ckpt.json");
  save_checkpoint(p, path);
  const ModelParams q = load_checkpoint(path);
  CHECK(q == p);
  CHECK(std::signbit(q.b2[1]));
  CHECK(q.class_ids == std::vector<ClassId>{0, 2, 3, 7});
  CHECK(checkpoint_to_string(q) == checkpoint_to_string(p));
}

TEST_CASE("expanded checkpoints record the grown registry") {
  const ModelParams base = random_params({0, 1, 2}, 1, 4);
  const ModelParams grown = expand_head(base, std::vector<ClassId>{5});
  CHECK(checkpoint_from_string(checkpoint_to_string(grown)).class_ids == std::vector<ClassId>{0, 1, 2, 5});
}

TEST_CASE("broken checkpoints raise load errors") {
  const std::string good = checkpoint_to_string(random_params({0, 1}, 3, 4));
  for (const std::size_t cut : {std::size_t{0}, std::size_t{1}, good.size() / 3, good.size() / 2, good.size() - 2})
    CHECK_THROWS_AS(checkpoint_from_string(good.substr(0, cut)), LoadError);

  nlohmann::json doc = nlohmann::json::parse(good);
  REQUIRE(doc.contains("version"));
  doc["version"] = doc["version"].get<int>() + 1;
  CHECK_THROWS_AS(checkpoint_from_string(doc.dump()), LoadError);
  CHECK_THROWS_AS(checkpoint_from_string("{\"format\": \"other\"}"), LoadError);
  CHECK_THROWS_AS(load_checkpoint(scratch("does-not-exist.json")), LoadError);

  const fs::path path = scratch("trunc.ckpt.json");
  std::ofstream(path, std::ios::binary) << good.substr(0, good.size() / 2);
  CHECK_THROWS_AS(load_checkpoint(path), LoadError);
}

TEST_CASE("PPM bytes for a 2x1 white image") {
  SceneImage white(1, 2, 1.0);
  const auto bytes = encode_ppm(white);
  const std::string header = "P6\n2 1\n255\n";
  REQUIRE(header.size() == 11u);
  REQUIRE(bytes.size() == header.size() + 6);
  CHECK(std::string(bytes.begin(), bytes.begin() + 11) == header);
  for (std::size_t k = 11; k < bytes.size(); ++k) CHECK(bytes[k] == 0xFF);

  const fs::path path = scratch("white.ppm");
  write_ppm(white, path);
  CHECK(slurp(path) == std::string(bytes.begin(), bytes.end()));
}

TEST_CASE("PPM round trip is lossless at 8-bit depth") {
  std::mt19937_64 gen(3);
  const SceneImage img = random_image(7, 5, gen);
  const SceneImage back = decode_ppm(encode_ppm(img));
  REQUIRE(back.h == 7);
  REQUIRE(back.w == 5);
  for (std::size_t k = 0; k < img.pixels.size(); ++k) {
    CHECK(back.pixels[k] == std::round(img.pixels[k] * 255.0) / 255.0);
    CHECK(std::abs(back.pixels[k] - img.pixels[k]) <= 0.5 / 255.0 + 1e-12);
  }
  CHECK(decode_ppm(encode_ppm(back)) == back);

  auto bytes = encode_ppm(img);
  bytes.resize(bytes.size() - 1);
  CHECK_THROWS_AS(decode_ppm(bytes), LoadError);
  CHECK_THROWS_AS(decode_ppm({'P', '3', '\n'}), LoadError);
}

TEST_CASE("label palette is fixed") {
  CHECK(label_color(0) == std::array<std::uint8_t, 3>{0, 0, 0});
  CHECK(label_color(1) == std::array<std::uint8_t, 3>{128, 0, 0});
  CHECK(label_color(2) == std::array<std::uint8_t, 3>{0, 128, 0});
  CHECK(label_color(3) == std::array<std::uint8_t, 3>{128, 128, 0});
  CHECK(label_color(4) == std::array<std::uint8_t, 3>{0, 0, 128});
  CHECK(label_color(5) == std::array<std::uint8_t, 3>{128, 0, 128});
  LabelMap m(1, 2);
  m.labels = {0, 2};
  const SceneImage r = render_labels(m);
  CHECK(r.at(0, 1, 1) == doctest::Approx(128.0 / 255.0));
  CHECK(r.at(0, 0, 0) == 0.0);
}

TEST_CASE("label and confidence files round trip") {
  LabelMap m(2, 3);
  m.labels = {0, 1, 2, 3, 10, 0};
  const fs::path lp = scratch("m.labels");
  write_label_file(m, lp);
  CHECK(slurp(lp).rfind("2 3\n", 0) == 0);
  CHECK(read_label_file(lp) == m);

  const std::vector<double> conf{0.5, 1.0 / 3.0, 1.0, 0.25, 0.999999999999, 1e-7};
  const fs::path cp = scratch("m.conf");
  write_confidence_file(2, 3, conf, cp);
  int h = 0, w = 0;
  CHECK(read_confidence_file(cp, h, w) == conf);
  CHECK(h == 2);
  CHECK(w == 3);

  const PseudoLabelMap pl = read_pseudo_label(lp, cp);
  CHECK(pl.labels == m.labels);
  CHECK(pl.confidence == conf);

  std::ofstream(scratch("short.labels")) << "2 2\n0 1 1\n";
  CHECK_THROWS_AS(read_label_file(scratch("short.labels")), LoadError);
  std::ofstream(scratch("bad.conf")) << "1 2\n0.5 1.5\n";
  CHECK_THROWS_AS(read_confidence_file(scratch("bad.conf"), h, w), LoadError);
  std::ofstream(scratch("other.labels")) << "1 2\n0 1\n";
  CHECK_THROWS_AS(read_pseudo_label(scratch("other.labels"), cp), LoadError);
}

TEST_CASE("directory loading is sorted and ignores other files") {
  const fs::path dir = scratch("pool");
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_ppm(SceneImage(2, 2, 0.0), dir / "b.ppm");
  write_ppm(SceneImage(2, 2, 1.0), dir / "a.ppm");
  std::ofstream(dir / "notes.txt") << "x";
  const auto images = load_ppm_dir(dir);
  REQUIRE(images.size() == 2u);
  CHECK(images[0].pixels[0] == 1.0);
  CHECK_THROWS_AS(load_ppm_dir(dir / "missing"), LoadError);
}
