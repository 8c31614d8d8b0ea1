#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "stcis/image.hpp"

namespace stcis {

// counts[gt][pred] over class ids 0..K-1.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);

  std::size_t num_classes() const { return k_; }
  std::uint64_t at(ClassId gt, ClassId pred) const {
    return counts_[static_cast<std::size_t>(gt) * k_ + static_cast<std::size_t>(pred)];
  }
  std::uint64_t total() const;

  std::uint64_t true_positives(ClassId c) const;
  std::uint64_t false_positives(ClassId c) const;
  std::uint64_t false_negatives(ClassId c) const;

  void accumulate(const LabelMap& pred, const LabelMap& gt);
  void merge(const ConfusionMatrix& other);

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix accumulate(ConfusionMatrix cm, const LabelMap& pred, const LabelMap& gt);

struct ClassGroup {
  std::string name;
  std::vector<ClassId> classes;
};

struct IoUReport {
  std::map<ClassId, std::optional<double>> per_class;
  std::map<ClassId, std::uint64_t> tp, fp, fn;
  std::vector<std::pair<std::string, std::optional<double>>> group_miou;  // in request order
  std::optional<double> overall;

  std::optional<double> group(const std::string& name) const;
};

// IoU_c = TP/(TP+FP+FN), undefined when the denominator is 0. Group and
// overall means skip undefined classes. `include_background` controls
// whether class 0 takes part in the overall mean.
IoUReport iou_report(const ConfusionMatrix& cm, const std::vector<ClassGroup>& groups,
                     bool include_background = true);

// One row per class (id,name,TP,FP,FN,IoU) then one row per group and the
// overall mean; IoU in percent with one decimal, empty when undefined.
void write_iou_csv(std::ostream& out, const IoUReport& report,
                   const std::map<ClassId, std::string>& class_names);

std::string format_percent(std::optional<double> value);

}  // namespace stcis
