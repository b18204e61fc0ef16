#include "cdec/training.hpp"

#include "cdec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace cdec {

namespace seeds {
Seed encoder_init(Seed run_seed) { return derive_seed(run_seed, "encoder-init"); }
Seed task_split(Seed run_seed) { return derive_seed(run_seed, "task-split"); }
Seed head_init(Seed run_seed, std::size_t task_index) {
  return derive_seed(run_seed, "head-init", task_index);
}
Seed epoch_shuffle(Seed run_seed, std::size_t task_index, Stage stage, std::size_t epoch) {
  return derive_seed(derive_seed(run_seed, stage == Stage::One ? "stage1" : "stage2", task_index),
                     "epoch", epoch);
}
Seed replay_shuffle(Seed run_seed, std::size_t task_index) {
  return derive_seed(run_seed, "replay", task_index);
}
Seed exemplars(Seed run_seed, std::size_t task_index, RelationId relation) {
  return derive_seed(derive_seed(run_seed, "exemplars", task_index), "relation", relation);
}
Seed instance_split(Seed run_seed) { return derive_seed(run_seed, "instance-split"); }
}  // namespace seeds

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Runs `epochs` passes of shuffled mini-batches over `data`.
void run_epochs(Model& model, std::span<const Instance> data, const TrainConfig& cfg,
                const Task& task, Stage stage, std::size_t epochs, double lr_prev, double lr_cur,
                double lr_encoder, TrainObserver* observer) {
  std::vector<std::size_t> order(data.size());
  std::vector<Instance> batch;
  batch.reserve(cfg.batch_size);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seeds::epoch_shuffle(cfg.seed, task.index, stage, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(data[order[i]]);
      }
      BatchGradients grads = batch_gradients(model, batch);
      apply_head_gradients(model.head, grads.head, model.head_opt, lr_prev, lr_cur);
      apply_encoder_gradients(model.encoder, grads.encoder, model.encoder_opt, lr_encoder);
      if (observer) {
        observer->on_step(task, stage, step, grads.loss, model);
      }
      ++step;
    }
  }
}

void reset_optimizers(Model& model) {
  model.head_opt = HeadOptimizer::for_head(model.head);
  model.encoder_opt = EncoderOptimizer::for_encoder(model.encoder);
}

std::vector<Instance> pooled(std::span<const Task> tasks, Split split) {
  std::vector<Instance> out;
  for (const auto& t : tasks) {
    const auto& part = split == Split::Train ? t.train : (split == Split::Valid ? t.valid : t.test);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<Instance> of_relation(std::span<const Instance> instances, RelationId relation) {
  std::vector<Instance> out;
  for (const auto& inst : instances) {
    if (inst.label == relation) out.push_back(inst);
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("train config: " + what); };
  if (!(lr_cur >= 0) || !(lr_prev >= 0) || !(lr_encoder >= 0)) fail("learning rates must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (hidden_dim < 1 || representation_dim < 1) fail("layer sizes must be >= 1");
  if (num_tasks < 1) fail("num_tasks must be >= 1");
  if (memory_size < 1) fail("memory_size must be >= 1");
}

LearnerState init_learner(Index input_dim, const TrainConfig& cfg,
                          std::vector<RelationPair> analogous_pairs) {
  LearnerState state{.model = {}, .bank = MemoryBank(cfg.memory_size), .seen = {},
                     .analogous_pairs = std::move(analogous_pairs)};
  state.model.encoder = Encoder::init(input_dim, cfg.hidden_dim, cfg.representation_dim,
                                      seeds::encoder_init(cfg.seed));
  state.model.head = ClassifierHead(cfg.representation_dim);
  reset_optimizers(state.model);
  return state;
}

BatchGradients batch_gradients(const Model& model, std::span<const Instance> batch) {
  BatchGradients out;
  out.head = Matrix::Zero(model.head.representation_dim(), model.head.num_columns());
  out.encoder = EncoderGradients::zeros_like(model.encoder);
  const Matrix& w = model.head.weights();
  for (const auto& inst : batch) {
    const auto col = model.head.column_of(inst.label);
    if (!col) {
      throw std::invalid_argument("training: relation " + std::to_string(inst.label) +
                                  " has no classifier column");
    }
    const EncoderTrace trace = encode_traced(model.encoder, inst.features);
    const Vector logits = matvec(w, trace.output);
    out.loss += xent_loss(softmax(logits), *col);
    const Vector grad_logits = softmax_xent_grad(logits, *col);
    out.head.noalias() += trace.output * grad_logits.transpose();
    const Vector grad_rep = w * grad_logits;
    encoder_backward(model.encoder, trace, grad_rep, out.encoder);
  }
  return out;
}

void train_stage1(Model& model, const Task& task, const TrainConfig& cfg, TrainObserver* observer) {
  if (task.train.empty()) {
    throw std::invalid_argument("train_stage1: task " + std::to_string(task.index) +
                                " has no training data");
  }
  reset_optimizers(model);
  const double lr_prev = cfg.use_adversarial_tuning ? cfg.lr_prev : cfg.lr_cur;
  const double lr_enc = cfg.slow_encoder_stage1 ? cfg.lr_prev : cfg.lr_encoder;
  run_epochs(model, task.train, cfg, task, Stage::One, cfg.epochs_stage1, lr_prev, cfg.lr_cur,
             lr_enc, observer);
}

void train_stage2(Model& model, const MemoryBank& bank, const Task& task, const TrainConfig& cfg,
                  const HeadSnapshot& snapshot, TrainObserver* observer) {
  for (RelationId r : model.head.relation_ids()) {
    if (!bank.contains(r)) {
      throw std::invalid_argument("train_stage2: memory has no exemplars for relation " +
                                  std::to_string(r));
    }
  }
  if (cfg.use_empirical_init) {
    restore_prev(model.head, snapshot);
  }
  // Restored weights make any stale moments meaningless.
  reset_optimizers(model);
  if (observer) {
    observer->on_stage2_begin(task, model);
  }
  const std::vector<Instance> replay = replay_set(bank, seeds::replay_shuffle(cfg.seed, task.index));
  run_epochs(model, replay, cfg, task, Stage::Two, cfg.epochs_stage2, cfg.lr_cur, cfg.lr_cur,
             cfg.lr_encoder, observer);
}

TaskMetrics run_task(LearnerState& state, const Task& task, const TrainConfig& cfg,
                     TrainObserver* observer) {
  if (task.index != state.seen.size() + 1) {
    throw std::invalid_argument("run_task: expected task " + std::to_string(state.seen.size() + 1) +
                                ", got " + std::to_string(task.index));
  }
  Model& model = state.model;

  model.head = grow(model.head, task.relations, seeds::head_init(cfg.seed, task.index));
  const HeadSnapshot snapshot = snapshot_prev(model.head);
  if (observer) {
    observer->on_stage1_begin(task, model, snapshot);
  }
  train_stage1(model, task, cfg, observer);
  if (observer) {
    observer->on_stage1_end(task, model);
  }

  TaskMetrics metrics;
  metrics.task_index = task.index;
  metrics.prev_f1_mean = kNaN;
  metrics.prev_prob_mass = kNaN;
  metrics.pair_silhouette = kNaN;
  if (!state.seen.empty()) {
    const std::vector<Instance> prev_valid = pooled(state.seen, Split::Valid);
    metrics.prev_prob_mass = prev_prob_mass(model.encoder, model.head, prev_valid);

    ClassifierHead measured = model.head;
    if (cfg.use_empirical_init) {
      restore_prev(measured, snapshot);
    }
    const std::vector<RelationId> prev_ids = snapshot.relation_ids();
    const auto f1 = per_relation_f1(model.encoder, measured, prev_valid, prev_ids);
    double sum = 0;
    for (const auto& [_, v] : f1) sum += v;
    metrics.prev_f1_mean = sum / double(f1.size());

    const std::set<RelationId> prev_set(prev_ids.begin(), prev_ids.end());
    const std::set<RelationId> cur_set(task.relations.begin(), task.relations.end());
    double sil_sum = 0;
    for (auto [a, b] : state.analogous_pairs) {
      RelationId prev_rel = a;
      RelationId cur_rel = b;
      if (prev_set.contains(b) && cur_set.contains(a)) {
        std::swap(prev_rel, cur_rel);
      } else if (!(prev_set.contains(a) && cur_set.contains(b))) {
        continue;
      }
      std::vector<Instance> members = of_relation(prev_valid, prev_rel);
      const std::vector<Instance> cur_members = of_relation(task.valid, cur_rel);
      members.insert(members.end(), cur_members.begin(), cur_members.end());
      std::vector<int> labels;
      for (const auto& inst : members) labels.push_back(inst.label == cur_rel ? 1 : 0);
      const double s = pair_silhouette(representations(model.encoder, members), labels);
      metrics.pairs.push_back({prev_rel, cur_rel, s});
      sil_sum += s;
    }
    if (!metrics.pairs.empty()) {
      metrics.pair_silhouette = sil_sum / double(metrics.pairs.size());
    }
  }

  for (RelationId r : task.relations) {
    const std::vector<Instance> candidates = of_relation(task.train, r);
    const std::vector<Vector> reps = representations(model.encoder, candidates);
    update_bank(state.bank, r,
                select_exemplars(candidates, reps, cfg.memory_size,
                                 seeds::exemplars(cfg.seed, task.index, r), cfg.exemplar_rule));
  }

  train_stage2(model, state.bank, task, cfg, snapshot, observer);

  state.seen.push_back(task);
  metrics.accuracy = accuracy_all_seen(model.encoder, model.head, std::span<const Task>(state.seen));
  metrics.replay_size = state.bank.num_instances();
  metrics.head_columns = model.head.num_columns();
  return metrics;
}

std::vector<std::vector<RelationId>> task_relations_for(const Dataset& dataset,
                                                        const TrainConfig& cfg,
                                                        std::span<const RelationPair> pairs) {
  const std::vector<RelationId> relations = dataset.relations();
  std::span<const RelationPair> apart = cfg.separate_pairs ? pairs : std::span<const RelationPair>{};
  return split_tasks(relations, cfg.num_tasks, seeds::task_split(cfg.seed), apart);
}

RunMetrics run_sequence(const Dataset& dataset, const TrainConfig& cfg,
                        std::span<const RelationPair> analogous_pairs, TrainObserver* observer,
                        LearnerState* final_state) {
  cfg.validate();
  if (dataset.instances.empty()) {
    throw std::invalid_argument("run_sequence: empty dataset");
  }
  const Dataset split = dataset.has_splits() ? dataset
                                             : split_instances(dataset, seeds::instance_split(cfg.seed));
  const std::vector<Task> tasks = build_tasks(split, task_relations_for(split, cfg, analogous_pairs));

  LearnerState state = init_learner(split.feature_dim(), cfg,
                                    {analogous_pairs.begin(), analogous_pairs.end()});
  RunMetrics out;
  out.seed = cfg.seed;
  for (const Task& task : tasks) {
    out.tasks.push_back(run_task(state, task, cfg, observer));
  }
  if (final_state) {
    *final_state = std::move(state);
  }
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  double sum = 0;
  std::size_t n = 0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    sum += v;
    ++n;
  }
  if (n == 0) {
    return {kNaN, kNaN};
  }
  const double mean = sum / double(n);
  if (n == 1) {
    return {mean, 0.0};
  }
  double sq = 0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    sq += (v - mean) * (v - mean);
  }
  return {mean, std::sqrt(sq / double(n - 1))};
}

std::vector<MeanStd> summarize_accuracy(std::span<const RunMetrics> runs) {
  std::size_t len = 0;
  for (const auto& r : runs) len = std::max(len, r.tasks.size());
  std::vector<MeanStd> out;
  for (std::size_t t = 0; t < len; ++t) {
    std::vector<double> vals;
    for (const auto& r : runs) {
      vals.push_back(t < r.tasks.size() ? r.tasks[t].accuracy : kNaN);
    }
    out.push_back(mean_std(vals));
  }
  return out;
}

}  // namespace cdec
