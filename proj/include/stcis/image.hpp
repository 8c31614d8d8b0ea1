#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace stcis {

using ClassId = int;
inline constexpr ClassId kBackground = 0;

inline constexpr int kChannels = 3;

// H x W x 3 image with values in [0, 1], row-major, channels interleaved.
struct SceneImage {
  int h = 0;
  int w = 0;
  std::vector<double> pixels;

  SceneImage() = default;
  SceneImage(int height, int width, double fill = 0.0)
      : h(height), w(width), pixels(static_cast<std::size_t>(height) * width * kChannels, fill) {}

  std::size_t index(int i, int j, int c) const {
    return (static_cast<std::size_t>(i) * w + j) * kChannels + c;
  }
  double at(int i, int j, int c) const { return pixels[index(i, j, c)]; }
  double& at(int i, int j, int c) { return pixels[index(i, j, c)]; }

  bool operator==(const SceneImage&) const = default;
};

// Per-pixel class ids, row-major. 0 is background.
struct LabelMap {
  int h = 0;
  int w = 0;
  std::vector<ClassId> labels;

  LabelMap() = default;
  LabelMap(int height, int width, ClassId fill = kBackground)
      : h(height), w(width), labels(static_cast<std::size_t>(height) * width, fill) {}

  std::size_t size() const { return labels.size(); }
  ClassId at(int i, int j) const { return labels[static_cast<std::size_t>(i) * w + j]; }
  ClassId& at(int i, int j) { return labels[static_cast<std::size_t>(i) * w + j]; }

  bool operator==(const LabelMap&) const = default;
};

}  // namespace stcis
