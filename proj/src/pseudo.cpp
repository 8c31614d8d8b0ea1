#include "stcis/pseudo.hpp"

#include "stcis/error.hpp"

namespace stcis {

PseudoLabelMap pseudo_label(const ModelParams& params, const FeatureMap& features) {
  return predict_labels(params, features);
}

PseudoLabelMap pseudo_label(const ModelParams& params, const SceneImage& image) {
  return predict_labels(params, extract_feature_map(image));
}

ClassId fuse_pixel_naive(ClassId old_label, ClassId new_label) {
  return old_label != kBackground ? old_label : new_label;
}

ClassId fuse_pixel_conflict_reduction(ClassId old_label, double old_conf, ClassId new_label,
                                      double new_conf) {
  if (old_label == kBackground) return new_label;
  if (new_label == kBackground) return old_label;
  return new_conf > old_conf ? new_label : old_label;
}

namespace {

void check_same_shape(const PseudoLabelMap& a, const PseudoLabelMap& b) {
  require(a.h == b.h && a.w == b.w && a.labels.size() == b.labels.size() &&
              a.confidence.size() == a.labels.size() && b.confidence.size() == b.labels.size(),
          "fuse: pseudo-label maps differ in size (" + std::to_string(a.h) + "x" +
              std::to_string(a.w) + " vs " + std::to_string(b.h) + "x" + std::to_string(b.w) + ")");
}

}  // namespace

FusedLabelMap fuse_naive(const PseudoLabelMap& old_map, const PseudoLabelMap& new_map) {
  check_same_shape(old_map, new_map);
  FusedLabelMap out(old_map.h, old_map.w);
  for (std::size_t n = 0; n < out.size(); ++n)
    out.labels[n] = fuse_pixel_naive(old_map.labels[n], new_map.labels[n]);
  return out;
}

FusedLabelMap fuse_conflict_reduction(const PseudoLabelMap& old_map,
                                      const PseudoLabelMap& new_map) {
  check_same_shape(old_map, new_map);
  FusedLabelMap out(old_map.h, old_map.w);
  for (std::size_t n = 0; n < out.size(); ++n)
    out.labels[n] = fuse_pixel_conflict_reduction(old_map.labels[n], old_map.confidence[n],
                                                  new_map.labels[n], new_map.confidence[n]);
  return out;
}

FusedLabelMap fuse(const PseudoLabelMap& old_map, const PseudoLabelMap& new_map, FusionMode mode) {
  return mode == FusionMode::Naive ? fuse_naive(old_map, new_map)
                                   : fuse_conflict_reduction(old_map, new_map);
}

}  // namespace stcis
