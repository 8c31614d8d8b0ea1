#include "stcis/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "stcis/error.hpp"

namespace stcis {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

template <typename T>
std::vector<T> array_field(const json& doc, const char* key, std::size_t expected) {
  if (!doc.contains(key) || !doc[key].is_array())
    throw LoadError(std::string("checkpoint: missing array '") + key + "'");
  auto values = doc[key].get<std::vector<T>>();
  if (values.size() != expected)
    throw LoadError(std::string("checkpoint: '") + key + "' has " + std::to_string(values.size()) +
                    " entries, expected " + std::to_string(expected));
  return values;
}

}  // namespace

std::string checkpoint_to_string(const ModelParams& params) {
  params.validate();
  json doc;
  doc["format"] = "stcis-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["feature_dim"] = params.feature_dim;
  doc["hidden_dim"] = params.hidden_dim;
  doc["class_ids"] = params.class_ids;
  doc["w1"] = params.w1;
  doc["b1"] = params.b1;
  doc["w2"] = params.w2;
  doc["b2"] = params.b2;
  return doc.dump() + "\n";
}

ModelParams checkpoint_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw LoadError(std::string("checkpoint: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != "stcis-checkpoint")
      throw LoadError("checkpoint: not a checkpoint document");
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw LoadError("checkpoint: unsupported version " + std::to_string(version));
    ModelParams p;
    p.feature_dim = doc.at("feature_dim").get<std::size_t>();
    p.hidden_dim = doc.at("hidden_dim").get<std::size_t>();
    if (p.feature_dim != kFeatureDim)
      throw LoadError("checkpoint: feature_dim " + std::to_string(p.feature_dim) +
                      " differs from the extractor's " + std::to_string(kFeatureDim));
    p.class_ids = doc.at("class_ids").get<std::vector<ClassId>>();
    const std::size_t k = p.class_ids.size();
    p.w1 = array_field<double>(doc, "w1", p.feature_dim * p.hidden_dim);
    p.b1 = array_field<double>(doc, "b1", p.hidden_dim);
    p.w2 = array_field<double>(doc, "w2", p.hidden_dim * k);
    p.b2 = array_field<double>(doc, "b2", k);
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw LoadError(std::string("checkpoint: ") + e.what());
  } catch (const ContractViolation& e) {
    throw LoadError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const ModelParams& params, const fs::path& path) {
  auto out = open_out(path);
  out << checkpoint_to_string(params);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ModelParams load_checkpoint(const fs::path& path) { return checkpoint_from_string(read_text(path)); }

std::vector<std::uint8_t> encode_ppm(const SceneImage& image) {
  const std::string header = "P6\n" + std::to_string(image.w) + " " + std::to_string(image.h) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(header.size() + image.pixels.size());
  for (const double v : image.pixels)
    bytes.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  return bytes;
}

void write_ppm(const SceneImage& image, const fs::path& path) {
  const auto bytes = encode_ppm(image);
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

SceneImage decode_ppm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  const auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  const auto read_int = [&]() -> int {
    skip_space();
    int value = 0;
    const auto* first = reinterpret_cast<const char*>(bytes.data()) + pos;
    const auto* last = reinterpret_cast<const char*>(bytes.data()) + bytes.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr == first) throw LoadError("ppm: malformed header");
    pos += static_cast<std::size_t>(ptr - first);
    return value;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw LoadError("ppm: not a P6 file");
  pos = 2;
  const int w = read_int(), h = read_int(), maxval = read_int();
  if (w <= 0 || h <= 0 || maxval != 255) throw LoadError("ppm: unsupported dimensions or maxval");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw LoadError("ppm: malformed header");
  ++pos;
  SceneImage image(h, w);
  if (bytes.size() - pos < image.pixels.size()) throw LoadError("ppm: truncated pixel data");
  for (std::size_t n = 0; n < image.pixels.size(); ++n) image.pixels[n] = bytes[pos + n] / 255.0;
  return image;
}

SceneImage read_ppm(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return decode_ppm(std::vector<std::uint8_t>(text.begin(), text.end()));
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

std::vector<SceneImage> load_ppm_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw LoadError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<SceneImage> images;
  for (const auto& f : files) images.push_back(read_ppm(f));
  return images;
}

std::array<std::uint8_t, 3> label_color(ClassId id) {
  std::array<std::uint8_t, 3> rgb{0, 0, 0};
  auto c = static_cast<unsigned>(id);
  for (int shift = 7; shift >= 0; --shift) {
    rgb[0] |= static_cast<std::uint8_t>(((c >> 0) & 1U) << shift);
    rgb[1] |= static_cast<std::uint8_t>(((c >> 1) & 1U) << shift);
    rgb[2] |= static_cast<std::uint8_t>(((c >> 2) & 1U) << shift);
    c >>= 3;
  }
  return rgb;
}

SceneImage render_labels(const LabelMap& labels) {
  SceneImage image(labels.h, labels.w);
  for (int i = 0; i < labels.h; ++i)
    for (int j = 0; j < labels.w; ++j) {
      const auto rgb = label_color(labels.at(i, j));
      for (int c = 0; c < kChannels; ++c) image.at(i, j, c) = rgb[static_cast<std::size_t>(c)] / 255.0;
    }
  return image;
}

namespace {

template <typename T>
std::vector<T> read_grid(const fs::path& path, int& h, int& w) {
  std::istringstream in(read_text(path));
  if (!(in >> h >> w) || h <= 0 || w <= 0) throw LoadError(path.string() + ": malformed size line");
  std::vector<T> values(static_cast<std::size_t>(h) * w);
  for (auto& v : values)
    if (!(in >> v)) throw LoadError(path.string() + ": truncated, expected " +
                                    std::to_string(values.size()) + " values");
  std::string extra;
  if (in >> extra) throw LoadError(path.string() + ": trailing data");
  return values;
}

template <typename T>
void write_grid(int h, int w, const std::vector<T>& values, const fs::path& path) {
  require(values.size() == static_cast<std::size_t>(h) * w, "write_grid: size mismatch");
  auto out = open_out(path);
  out << h << ' ' << w << '\n';
  if constexpr (std::is_floating_point_v<T>) out.precision(17);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) out << (j ? " " : "") << values[static_cast<std::size_t>(i) * w + j];
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void write_label_file(const LabelMap& labels, const fs::path& path) {
  write_grid(labels.h, labels.w, labels.labels, path);
}

LabelMap read_label_file(const fs::path& path) {
  LabelMap map;
  map.labels = read_grid<ClassId>(path, map.h, map.w);
  for (const ClassId id : map.labels)
    if (id < 0) throw LoadError(path.string() + ": negative class id");
  return map;
}

void write_confidence_file(int h, int w, const std::vector<double>& confidence, const fs::path& path) {
  write_grid(h, w, confidence, path);
}

std::vector<double> read_confidence_file(const fs::path& path, int& h, int& w) {
  auto values = read_grid<double>(path, h, w);
  for (const double v : values)
    if (!(v > 0.0 && v <= 1.0)) throw LoadError(path.string() + ": confidence outside (0, 1]");
  return values;
}

PseudoLabelMap read_pseudo_label(const fs::path& labels, const fs::path& confidence) {
  const LabelMap map = read_label_file(labels);
  int h = 0, w = 0;
  auto conf = read_confidence_file(confidence, h, w);
  if (h != map.h || w != map.w)
    throw LoadError("label file " + labels.string() + " and confidence file " + confidence.string() +
                    " differ in size");
  return {map.h, map.w, map.labels, std::move(conf)};
}

}  // namespace stcis
