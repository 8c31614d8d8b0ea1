#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stcis/image.hpp"
#include "stcis/model.hpp"

namespace stcis {

inline constexpr int kCheckpointVersion = 1;

// JSON document: format, version, feature_dim, hidden_dim, class_ids and the
// flat row-major arrays w1, b1, w2, b2. Doubles are written with enough
// digits to round-trip exactly.
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_to_string(const ModelParams& params);
ModelParams checkpoint_from_string(const std::string& text);

// Binary P6, maxval 255: "P6\n<w> <h>\n255\n" then row-major RGB bytes.
// Values are quantized as round(255 * v).
void write_ppm(const SceneImage& image, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_ppm(const SceneImage& image);
SceneImage read_ppm(const std::filesystem::path& path);
SceneImage decode_ppm(const std::vector<std::uint8_t>& bytes);

// Every *.ppm file in a directory, in filename order.
std::vector<SceneImage> load_ppm_dir(const std::filesystem::path& dir);

// Colour for a class id: the bit-interleaved palette used by the Pascal VOC
// tools (0 = black, 1 = dark red, 2 = dark green, ...).
std::array<std::uint8_t, 3> label_color(ClassId id);
SceneImage render_labels(const LabelMap& labels);

// Plain text: "h w" then h*w whitespace-separated values, row-major.
void write_label_file(const LabelMap& labels, const std::filesystem::path& path);
LabelMap read_label_file(const std::filesystem::path& path);
void write_confidence_file(int h, int w, const std::vector<double>& confidence,
                           const std::filesystem::path& path);
std::vector<double> read_confidence_file(const std::filesystem::path& path, int& h, int& w);

// Label file + confidence file pair.
PseudoLabelMap read_pseudo_label(const std::filesystem::path& labels,
                                 const std::filesystem::path& confidence);

}  // namespace stcis
