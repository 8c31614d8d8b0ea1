#include "stcis/continual.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <sstream>

#include "stcis/error.hpp"
#include "stcis/rng.hpp"

namespace stcis {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::FT: return "FT";
    case Method::Joint: return "Joint";
    case Method::ST: return "ST";
    case Method::STCR: return "ST+CR";
    case Method::STCRMS: return "ST+CR+MS";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view name) {
  for (const Method m : {Method::FT, Method::Joint, Method::ST, Method::STCR, Method::STCRMS})
    if (to_string(m) == name) return m;
  return std::nullopt;
}

bool uses_aux(Method method) {
  return method == Method::ST || method == Method::STCR || method == Method::STCRMS;
}

FusionMode MethodConfig::fusion_mode() const {
  return method == Method::ST ? FusionMode::Naive : FusionMode::ConflictReduction;
}

bool MethodConfig::maximize_entropy() const { return method == Method::STCRMS; }

int MethodConfig::aux_images() const {
  return std::max(1, static_cast<int>(std::ceil(aux_fraction * aux_pool_size - 1e-9)));
}

void MethodConfig::validate() const {
  require(lambda >= 0.0, "MethodConfig: lambda must be nonnegative");
  require(aux_fraction > 0.0 && aux_fraction <= 1.0, "MethodConfig: aux_fraction must be in (0, 1]");
  require(self_train_epochs >= 1, "MethodConfig: self_train_epochs must be at least 1");
  require(hidden_dim >= 1, "MethodConfig: hidden_dim must be positive");
  require(!uses_aux(method) || aux_pool_size >= 1,
          "MethodConfig: self-training methods need a nonempty auxiliary pool");
  first_task.validate();
  later.validate();
}

std::vector<TrainingImage> prepare_training_images(const std::vector<SessionItem>& items,
                                                   const ModelParams& params,
                                                   bool use_ground_truth) {
  std::vector<TrainingImage> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    const LabelMap& labels = use_ground_truth ? item.ground_truth : item.labels;
    TrainingImage image{extract_feature_map(item.image), {}};
    image.targets.reserve(labels.size());
    for (const ClassId id : labels.labels) {
      const auto k = params.index_of(id);
      require(k.has_value(), "training label " + std::to_string(id) + " outside the label space");
      image.targets.push_back(*k);
    }
    out.push_back(std::move(image));
  }
  return out;
}

void train_sgd(ModelParams& params, std::span<const TrainingImage> images, const TrainConfig& cfg) {
  cfg.validate();
  require(!images.empty(), "train_sgd: no training images");
  Rng rng(derive_seed(cfg.seed, streams::kTrainOrder));
  std::vector<std::size_t> order(images.size());
  std::vector<double> features;
  std::vector<std::size_t> targets;
  std::vector<std::size_t> pixel_order;
  Gradients grads;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t n = 0; n < order.size(); ++n) order[n] = n;
    rng.shuffle(order);
    for (const std::size_t idx : order) {
      const TrainingImage& image = images[idx];
      const std::size_t pixels = image.targets.size();
      pixel_order.resize(pixels);
      for (std::size_t p = 0; p < pixels; ++p) pixel_order[p] = p;
      if (cfg.batch_pixels < pixels) rng.shuffle(pixel_order);

      for (std::size_t start = 0; start < pixels; start += cfg.batch_pixels) {
        const std::size_t stop = std::min(pixels, start + cfg.batch_pixels);
        features.clear();
        targets.clear();
        for (std::size_t p = start; p < stop; ++p) {
          const auto f = image.features.at(pixel_order[p]);
          features.insert(features.end(), f.begin(), f.end());
          targets.push_back(image.targets[pixel_order[p]]);
        }
        loss_and_gradient({features, targets}, params, cfg.lambda, grads);
        sgd_step_inplace(params, grads, cfg.learning_rate);
      }
    }
  }
}

double dataset_loss(const ModelParams& params, std::span<const TrainingImage> images, double lambda) {
  require(!images.empty(), "dataset_loss: no images");
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& image : images) {
    const double l = total_loss({image.features.values, image.targets}, params, lambda);
    sum += l * static_cast<double>(image.targets.size());
    count += image.targets.size();
  }
  return sum / static_cast<double>(count);
}

ModelParams train_first_task(const SessionDataset& session, const TrainConfig& cfg,
                             std::size_t hidden_dim) {
  require(session.index == 1, "train_first_task: expects session 1");
  require(!session.items.empty(), "train_first_task: empty session");
  cfg.validate();
  ModelParams params =
      random_params(session.label_set, derive_seed(cfg.seed, streams::kInit), hidden_dim);
  const auto images = prepare_training_images(session.items, params);
  train_sgd(params, images, cfg);
  return params;
}

ModelParams finetune_new_task(const ModelParams& prev, const SessionDataset& session,
                              const TrainConfig& cfg) {
  require(session.index >= 2, "finetune_new_task: expects session index >= 2");
  require(!session.items.empty(), "finetune_new_task: empty session");
  for (const ClassId id : session.current_classes)
    require(!prev.index_of(id),
            "finetune_new_task: class " + std::to_string(id) + " already learned");
  cfg.validate();
  ModelParams params = expand_head(prev, session.current_classes);
  const auto images = prepare_training_images(session.items, params);
  train_sgd(params, images, cfg);
  return params;
}

namespace {

std::vector<ClassId> added_classes(const ModelParams& prev, const ModelParams& current) {
  require(current.class_ids.size() > prev.class_ids.size() &&
              std::equal(prev.class_ids.begin(), prev.class_ids.end(), current.class_ids.begin()),
          "label spaces inconsistent: current model must extend the previous label set");
  require(prev.hidden_dim == current.hidden_dim && prev.feature_dim == current.feature_dim,
          "label spaces inconsistent: model dimensions differ");
  return {current.class_ids.begin() + static_cast<std::ptrdiff_t>(prev.class_ids.size()),
          current.class_ids.end()};
}

}  // namespace

std::vector<FusedLabelMap> fuse_pool(const ModelParams& prev, const ModelParams& current,
                                     std::span<const FeatureMap> aux, FusionMode mode) {
  std::vector<FusedLabelMap> fused;
  fused.reserve(aux.size());
  for (const auto& features : aux)
    fused.push_back(fuse(pseudo_label(prev, features), pseudo_label(current, features), mode));
  return fused;
}

ModelParams build_joint_init(const ModelParams& prev, const ModelParams& current, bool donor_copy) {
  const auto added = added_classes(prev, current);
  return expand_head(prev, added, donor_copy ? &current : nullptr);
}

ModelParams self_train_retrain(const ModelParams& prev, const ModelParams& current,
                               std::span<const FeatureMap> aux, const RetrainConfig& cfg) {
  require(!aux.empty(), "self_train_retrain: empty auxiliary pool");
  require(cfg.epochs >= 1, "self_train_retrain: epochs must be at least 1");
  ModelParams joint = build_joint_init(prev, current, cfg.donor_copy);
  const auto fused = fuse_pool(prev, current, aux, cfg.mode);

  std::vector<TrainingImage> images;
  images.reserve(aux.size());
  for (std::size_t n = 0; n < aux.size(); ++n) {
    TrainingImage image{aux[n], {}};
    image.targets.reserve(fused[n].size());
    for (const ClassId id : fused[n].labels) image.targets.push_back(*joint.index_of(id));
    images.push_back(std::move(image));
  }
  const TrainConfig train{cfg.learning_rate, cfg.epochs, cfg.maximize_entropy ? cfg.lambda : 0.0,
                          cfg.batch_pixels, cfg.seed};
  train_sgd(joint, images, train);
  return joint;
}

ModelParams self_train_retrain(const ModelParams& prev, const ModelParams& current,
                               const AuxiliaryPool& aux, const RetrainConfig& cfg) {
  std::vector<FeatureMap> features;
  features.reserve(aux.images.size());
  for (const auto& image : aux.images) features.push_back(extract_feature_map(image));
  return self_train_retrain(prev, current, features, cfg);
}

std::vector<ClassGroup> report_groups(const ScenarioSpec& spec, int t) {
  std::vector<ClassGroup> groups{{"old", spec.class_partition.front()}};
  if (t >= 2) {
    ClassGroup added{"new", {}};
    for (int s = 1; s < t; ++s)
      added.classes.insert(added.classes.end(), spec.class_partition[s].begin(),
                           spec.class_partition[s].end());
    groups.push_back(std::move(added));
  }
  return groups;
}

ConfusionMatrix confusion(const ModelParams& params, const std::vector<SessionItem>& test_set) {
  ConfusionMatrix cm(static_cast<std::size_t>(params.class_ids.back()) + 1);
  for (const auto& item : test_set) {
    const auto pred = predict_labels(params, extract_feature_map(item.image));
    cm.accumulate(pred.label_map(), item.ground_truth);
  }
  return cm;
}

IoUReport evaluate(const ModelParams& params, const std::vector<SessionItem>& test_set,
                   const std::vector<ClassGroup>& groups, bool include_background) {
  return iou_report(confusion(params, test_set), groups, include_background);
}

const ModelParams* PhaseCache::find(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void PhaseCache::store(const std::string& key, const ModelParams& params) {
  entries_.insert_or_assign(key, params);
}

namespace {

std::uint64_t fingerprint(const ModelParams& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t n = 0; n < bytes; ++n) h = (h ^ b[n]) * 0x100000001b3ULL;
  };
  for (const auto* v : {&p.w1, &p.b1, &p.w2, &p.b2}) mix(v->data(), v->size() * sizeof(double));
  mix(p.class_ids.data(), p.class_ids.size() * sizeof(ClassId));
  return h;
}

std::string data_key(const ScenarioSpec& spec, const GeneratorConfig& gen) {
  std::ostringstream key;
  key << std::hexfloat << to_string(spec.setting) << '|' << spec.images_per_session << '|'
      << spec.seed << '|';
  for (const auto& s : spec.class_partition) {
    for (const ClassId id : s) key << id << ',';
    key << ';';
  }
  key << '|' << gen.h << 'x' << gen.w << '|' << gen.min_objects << '-' << gen.max_objects << '|'
      << gen.min_size << '-' << gen.max_size << '|' << gen.noise << '|' << gen.color_jitter << '|'
      << gen.background_lo << '-' << gen.background_hi << '|';
  for (const auto& c : gen.classes)
    key << c.id << ':' << static_cast<int>(c.shape) << ':' << c.color.r << ',' << c.color.g << ','
        << c.color.b << ';';
  return key.str();
}

std::string train_key(const TrainConfig& cfg) {
  std::ostringstream key;
  key << std::hexfloat << cfg.learning_rate << '|' << cfg.epochs << '|' << cfg.lambda << '|'
      << cfg.batch_pixels << '|' << cfg.seed;
  return key.str();
}

class PhaseTimer {
 public:
  PhaseTimer(std::map<std::string, double>& sink, std::string name)
      : sink_(sink), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
  ~PhaseTimer() {
    sink_[name_] +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::map<std::string, double>& sink_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

TrainConfig session_config(const TrainConfig& base, std::uint64_t run_seed, int t) {
  TrainConfig cfg = base;
  cfg.seed = derive_seed(run_seed, streams::kTrainOrder + static_cast<std::uint64_t>(t));
  return cfg;
}

}  // namespace

RunRecord run_scenario(const ScenarioSpec& spec, const GeneratorConfig& gen,
                       const MethodConfig& method, PhaseCache* cache) {
  method.validate();
  RunRecord record{spec, gen, method, {}, {}, {}};

  std::vector<SessionDataset> sessions;
  {
    PhaseTimer timer(record.phase_seconds, "generate");
    sessions = build_sessions(spec, gen);
  }
  const std::string dkey = data_key(spec, gen) + "|h" + std::to_string(method.hidden_dim);

  const auto finish_session = [&](int t, const ModelParams& params) {
    PhaseTimer timer(record.phase_seconds, "evaluate");
    const auto test_set = build_test_set(spec, gen, t);
    SessionResult result{t, params, confusion(params, test_set), {}};
    result.report = iou_report(result.confusion, report_groups(spec, t), method.include_background);
    record.sessions.push_back(std::move(result));
  };

  TrainConfig first_cfg = session_config(method.first_task, spec.seed, 1);
  if (method.ms_everywhere) first_cfg.lambda = method.lambda;

  if (method.method == Method::Joint) {
    SessionDataset all;
    all.index = 1;
    all.label_set = spec.label_set(spec.sessions());
    all.current_classes = spec.foreground_classes();
    for (auto& s : sessions)
      for (auto& item : s.items) {
        item.labels = item.ground_truth;
        all.items.push_back(std::move(item));
      }
    PhaseTimer timer(record.phase_seconds, "train_joint");
    ++record.counters.first_task_calls;
    const ModelParams params = train_first_task(all, first_cfg, method.hidden_dim);
    finish_session(spec.sessions(), params);
    record.sessions.back().session = 1;
    return record;
  }

  ModelParams current;
  {
    PhaseTimer timer(record.phase_seconds, "train_first_task");
    const std::string key = "first|" + dkey + "|" + train_key(first_cfg);
    ++record.counters.first_task_calls;
    if (const ModelParams* hit = cache ? cache->find(key) : nullptr) {
      current = *hit;
    } else {
      current = train_first_task(sessions.front(), first_cfg, method.hidden_dim);
      if (cache) cache->store(key, current);
    }
  }
  finish_session(1, current);

  std::vector<FeatureMap> aux;
  if (uses_aux(method.method) && spec.sessions() > 1) {
    PhaseTimer timer(record.phase_seconds, "generate");
    GeneratorConfig aux_gen = gen;
    aux_gen.seed = derive_seed(spec.seed, streams::kAuxPool);
    const AuxiliaryPool pool = build_aux_pool(aux_gen, method.aux_images(), method.aux_shift);
    for (const auto& image : pool.images) aux.push_back(extract_feature_map(image));
  }

  for (int t = 2; t <= spec.sessions(); ++t) {
    const SessionDataset& session = sessions[static_cast<std::size_t>(t - 1)];
    TrainConfig ft_cfg = session_config(method.later, spec.seed, t);
    if (method.ms_everywhere) ft_cfg.lambda = method.lambda;

    ModelParams finetuned;
    {
      PhaseTimer timer(record.phase_seconds, "finetune");
      const std::string key = "finetune|" + dkey + "|" + std::to_string(t) + "|" +
                              std::to_string(fingerprint(current)) + "|" + train_key(ft_cfg);
      ++record.counters.finetune_calls;
      if (const ModelParams* hit = cache ? cache->find(key) : nullptr) {
        finetuned = *hit;
      } else {
        finetuned = finetune_new_task(current, session, ft_cfg);
        if (cache) cache->store(key, finetuned);
      }
    }

    if (!uses_aux(method.method)) {
      current = std::move(finetuned);
    } else {
      PhaseTimer timer(record.phase_seconds, "self_train");
      RetrainConfig rc;
      rc.mode = method.fusion_mode();
      rc.maximize_entropy = method.maximize_entropy();
      rc.lambda = method.lambda;
      rc.learning_rate = method.later.learning_rate;
      rc.epochs = method.self_train_epochs;
      rc.batch_pixels = method.later.batch_pixels;
      rc.donor_copy = !method.zero_init_joint;
      rc.seed = derive_seed(spec.seed, streams::kTrainOrder + 0x100 + static_cast<std::uint64_t>(t));
      record.counters.aux_images_read += static_cast<int>(aux.size());
      record.counters.fusion_calls += static_cast<int>(aux.size());
      ++record.counters.retrain_calls;
      current = self_train_retrain(current, finetuned, aux, rc);
    }
    finish_session(t, current);
  }
  return record;
}

}  // namespace stcis
