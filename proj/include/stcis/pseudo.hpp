#pragma once

#include <vector>

#include "stcis/image.hpp"
#include "stcis/model.hpp"

namespace stcis {

// Fused pseudo labels for one auxiliary image.
using FusedLabelMap = LabelMap;

enum class FusionMode { Naive, ConflictReduction };

PseudoLabelMap pseudo_label(const ModelParams& params, const SceneImage& image);
PseudoLabelMap pseudo_label(const ModelParams& params, const FeatureMap& features);

// Per-pixel rules on (old label, old confidence, new label, new confidence).
// The naive rule trusts any old foreground label. Conflict reduction lets
// the new model win a foreground/foreground conflict only when it is
// strictly more confident; ties stay with the old model.
ClassId fuse_pixel_naive(ClassId old_label, ClassId new_label);
ClassId fuse_pixel_conflict_reduction(ClassId old_label, double old_conf, ClassId new_label,
                                      double new_conf);

FusedLabelMap fuse_naive(const PseudoLabelMap& old_map, const PseudoLabelMap& new_map);
FusedLabelMap fuse_conflict_reduction(const PseudoLabelMap& old_map, const PseudoLabelMap& new_map);
FusedLabelMap fuse(const PseudoLabelMap& old_map, const PseudoLabelMap& new_map, FusionMode mode);

}  // namespace stcis
