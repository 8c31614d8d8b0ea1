#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stcis/metrics.hpp"
#include "stcis/model.hpp"
#include "stcis/pseudo.hpp"
#include "stcis/scenes.hpp"

namespace stcis {

enum class Method { FT, Joint, ST, STCR, STCRMS };

std::string_view to_string(Method method);
std::optional<Method> parse_method(std::string_view name);
bool uses_aux(Method method);

struct MethodConfig {
  Method method = Method::STCRMS;
  double lambda = 1.0;  // entropy weight; applied only when MS is active
  double aux_fraction = 1.0;
  int aux_pool_size = 400;
  AuxShift aux_shift;
  int self_train_epochs = 1;
  std::size_t hidden_dim = kDefaultHiddenDim;
  TrainConfig first_task{1e-2, 10, 0.0, 16, 0};
  TrainConfig later{1e-3, 40, 0.0, 16, 0};
  bool ms_everywhere = false;    // also apply the entropy term while fine-tuning
  bool zero_init_joint = false;  // new-class head of the joint model starts at zero
  bool include_background = true;

  // Fusion rule and whether the entropy term is used during retraining.
  FusionMode fusion_mode() const;
  bool maximize_entropy() const;
  // Images of the pool actually used: ceil(aux_fraction * aux_pool_size).
  int aux_images() const;
  void validate() const;
};

// A session's labelled pixels, prepared once for training.
struct TrainingImage {
  FeatureMap features;
  std::vector<std::size_t> targets;  // indices into the model's class_ids
};

std::vector<TrainingImage> prepare_training_images(const std::vector<SessionItem>& items,
                                                   const ModelParams& params,
                                                   bool use_ground_truth = false);

// Plain SGD on total_loss over `images` for cfg.epochs passes. Image order is
// reshuffled each epoch; pixels of an image are shuffled and cut into
// batches of cfg.batch_pixels.
void train_sgd(ModelParams& params, std::span<const TrainingImage> images, const TrainConfig& cfg);

// Mean total_loss over all pixels of `images` (one batch per image).
double dataset_loss(const ModelParams& params, std::span<const TrainingImage> images, double lambda);

ModelParams train_first_task(const SessionDataset& session, const TrainConfig& cfg,
                             std::size_t hidden_dim = kDefaultHiddenDim);

ModelParams finetune_new_task(const ModelParams& prev, const SessionDataset& session,
                              const TrainConfig& cfg);

// Pseudo-labels every auxiliary image with both models and fuses them.
std::vector<FusedLabelMap> fuse_pool(const ModelParams& prev, const ModelParams& current,
                                     std::span<const FeatureMap> aux, FusionMode mode);

// Copy of `prev` whose head gains the classes `current` adds, with columns
// copied from `current` (or zero when donor_copy is false).
ModelParams build_joint_init(const ModelParams& prev, const ModelParams& current, bool donor_copy);

struct RetrainConfig {
  FusionMode mode = FusionMode::ConflictReduction;
  bool maximize_entropy = true;
  double lambda = 1.0;
  double learning_rate = 1e-3;
  int epochs = 1;
  std::size_t batch_pixels = 16;
  bool donor_copy = true;
  std::uint64_t seed = 0;
};

ModelParams self_train_retrain(const ModelParams& prev, const ModelParams& current,
                               std::span<const FeatureMap> aux, const RetrainConfig& cfg);
ModelParams self_train_retrain(const ModelParams& prev, const ModelParams& current,
                               const AuxiliaryPool& aux, const RetrainConfig& cfg);

// Groups reported after session t: "old" = C^1, "new" = C^2..C^t.
std::vector<ClassGroup> report_groups(const ScenarioSpec& spec, int t);

IoUReport evaluate(const ModelParams& params, const std::vector<SessionItem>& test_set,
                   const std::vector<ClassGroup>& groups, bool include_background);
ConfusionMatrix confusion(const ModelParams& params, const std::vector<SessionItem>& test_set);

struct RunCounters {
  int aux_images_read = 0;
  int fusion_calls = 0;
  int finetune_calls = 0;
  int retrain_calls = 0;
  int first_task_calls = 0;
};

struct SessionResult {
  int session = 0;
  ModelParams checkpoint;
  ConfusionMatrix confusion{1};
  IoUReport report;
};

struct RunRecord {
  ScenarioSpec spec;
  GeneratorConfig generator;
  MethodConfig method;
  std::vector<SessionResult> sessions;
  std::map<std::string, double> phase_seconds;
  RunCounters counters;

  const SessionResult& final_session() const { return sessions.back(); }
};

// Memo of trained models shared between runs that differ only in the
// retraining method. Reusing an entry yields the exact parameters a fresh
// training would, since every phase is deterministic in its inputs.
class PhaseCache {
 public:
  const ModelParams* find(const std::string& key) const;
  void store(const std::string& key, const ModelParams& params);
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, ModelParams> entries_;
};

RunRecord run_scenario(const ScenarioSpec& spec, const GeneratorConfig& gen,
                       const MethodConfig& method, PhaseCache* cache = nullptr);

}  // namespace stcis
