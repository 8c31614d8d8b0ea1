#include "stcis/metrics.hpp"

#include <cstdio>

#include "stcis/error.hpp"

namespace stcis {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : k_(num_classes), counts_(num_classes * num_classes, 0) {
  require(num_classes >= 1, "ConfusionMatrix: needs at least one class");
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t sum = 0;
  for (const auto c : counts_) sum += c;
  return sum;
}

std::uint64_t ConfusionMatrix::true_positives(ClassId c) const { return at(c, c); }

std::uint64_t ConfusionMatrix::false_positives(ClassId c) const {
  std::uint64_t sum = 0;
  for (std::size_t g = 0; g < k_; ++g)
    if (static_cast<ClassId>(g) != c) sum += at(static_cast<ClassId>(g), c);
  return sum;
}

std::uint64_t ConfusionMatrix::false_negatives(ClassId c) const {
  std::uint64_t sum = 0;
  for (std::size_t p = 0; p < k_; ++p)
    if (static_cast<ClassId>(p) != c) sum += at(c, static_cast<ClassId>(p));
  return sum;
}

void ConfusionMatrix::accumulate(const LabelMap& pred, const LabelMap& gt) {
  require(pred.h == gt.h && pred.w == gt.w && pred.size() == gt.size(),
          "accumulate: prediction and ground truth differ in size");
  const auto in_range = [this](ClassId id) {
    return id >= 0 && static_cast<std::size_t>(id) < k_;
  };
  for (std::size_t n = 0; n < gt.size(); ++n)
    require(in_range(gt.labels[n]) && in_range(pred.labels[n]),
            "accumulate: label outside 0.." + std::to_string(k_ - 1));
  for (std::size_t n = 0; n < gt.size(); ++n)
    ++counts_[static_cast<std::size_t>(gt.labels[n]) * k_ + static_cast<std::size_t>(pred.labels[n])];
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  require(other.k_ == k_, "ConfusionMatrix::merge: size mismatch");
  for (std::size_t n = 0; n < counts_.size(); ++n) counts_[n] += other.counts_[n];
}

ConfusionMatrix accumulate(ConfusionMatrix cm, const LabelMap& pred, const LabelMap& gt) {
  cm.accumulate(pred, gt);
  return cm;
}

std::optional<double> IoUReport::group(const std::string& name) const {
  for (const auto& [n, v] : group_miou)
    if (n == name) return v;
  throw ContractViolation("IoUReport: no group named '" + name + "'");
}

namespace {

std::optional<double> mean_defined(const std::map<ClassId, std::optional<double>>& per_class,
                                   const std::vector<ClassId>& classes) {
  double sum = 0.0;
  int count = 0;
  for (const ClassId c : classes) {
    const auto it = per_class.find(c);
    if (it == per_class.end() || !it->second) continue;
    sum += *it->second;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

}  // namespace

IoUReport iou_report(const ConfusionMatrix& cm, const std::vector<ClassGroup>& groups,
                     bool include_background) {
  IoUReport report;
  std::vector<ClassId> scored;
  for (std::size_t k = 0; k < cm.num_classes(); ++k) {
    const auto c = static_cast<ClassId>(k);
    const auto tp = cm.true_positives(c), fp = cm.false_positives(c), fn = cm.false_negatives(c);
    report.tp[c] = tp;
    report.fp[c] = fp;
    report.fn[c] = fn;
    const auto denom = tp + fp + fn;
    report.per_class[c] = denom == 0 ? std::nullopt
                                     : std::optional<double>(static_cast<double>(tp) /
                                                             static_cast<double>(denom));
    if (c != kBackground || include_background) scored.push_back(c);
  }
  for (const auto& g : groups) report.group_miou.emplace_back(g.name, mean_defined(report.per_class, g.classes));
  report.overall = mean_defined(report.per_class, scored);
  return report;
}

std::string format_percent(std::optional<double> value) {
  if (!value) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", *value * 100.0);
  return buf;
}

void write_iou_csv(std::ostream& out, const IoUReport& report,
                   const std::map<ClassId, std::string>& class_names) {
  out << "id,name,TP,FP,FN,IoU\n";
  for (const auto& [c, iou] : report.per_class) {
    const auto name = class_names.find(c);
    out << c << ',' << (name != class_names.end() ? name->second : std::to_string(c)) << ','
        << report.tp.at(c) << ',' << report.fp.at(c) << ',' << report.fn.at(c) << ','
        << format_percent(iou) << '\n';
  }
  for (const auto& [name, miou] : report.group_miou)
    out << "group," << name << ",,,," << format_percent(miou) << '\n';
  out << "overall,all,,,," << format_percent(report.overall) << '\n';
}

}  // namespace stcis
