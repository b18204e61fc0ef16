#pragma once

#include "cdec/datastream.hpp"
#include "cdec/memory.hpp"
#include "cdec/model.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace cdec {

struct TrainConfig {
  std::size_t epochs_stage1 = 10;
  std::size_t epochs_stage2 = 10;
  std::size_t batch_size = 32;
  double lr_cur = 1e-3;
  double lr_prev = 1e-5;
  double lr_encoder = 1e-5;
  bool use_empirical_init = true;
  bool use_adversarial_tuning = true;
  /// Also slow the encoder to lr_prev during stage 1. Off by default.
  bool slow_encoder_stage1 = false;
  Seed seed = 0;

  Index hidden_dim = 64;
  Index representation_dim = 64;
  std::size_t num_tasks = 10;
  std::size_t memory_size = 10;
  ExemplarRule exemplar_rule = ExemplarRule::KMeans;
  /// Keep analogous pairs in different tasks when splitting relations.
  bool separate_pairs = true;

  /// Throws std::invalid_argument on the first bad field.
  void validate() const;
};

enum class Stage : std::uint8_t { One = 1, Two = 2 };

/// Hooks into the training loop. Default implementations do nothing.
class TrainObserver {
 public:
  virtual ~TrainObserver() = default;
  /// Head grown and snapshot taken; no stage-1 step yet.
  virtual void on_stage1_begin(const Task&, const Model&, const HeadSnapshot&) {}
  virtual void on_stage1_end(const Task&, const Model&) {}
  /// Previous columns restored (if enabled); no stage-2 step yet.
  virtual void on_stage2_begin(const Task&, const Model&) {}
  /// After each optimizer step, with the summed batch loss that produced it.
  virtual void on_step(const Task&, Stage, std::size_t, double, const Model&) {}
};

struct PairScore {
  RelationId previous = 0;
  RelationId current = 0;
  double silhouette = 0;
};

/// Per-task numbers. Stage-1 diagnostics are NaN when there are no previous
/// relations yet.
struct TaskMetrics {
  std::size_t task_index = 0;
  double accuracy = 0;        // all seen relations, after stage 2
  double prev_f1_mean = 0;    // end of stage 1, previous validation sets
  double prev_prob_mass = 0;  // end of stage 1, previous validation sets
  double pair_silhouette = 0; // mean over analogous pairs completed by this task
  std::vector<PairScore> pairs;
  std::size_t replay_size = 0;
  Index head_columns = 0;
};

struct RunMetrics {
  Seed seed = 0;
  std::vector<TaskMetrics> tasks;

  double final_accuracy() const { return tasks.empty() ? 0.0 : tasks.back().accuracy; }
};

/// Everything that persists across tasks of one sequence.
struct LearnerState {
  Model model;
  MemoryBank bank;
  std::vector<Task> seen;
  std::vector<RelationPair> analogous_pairs;
};

LearnerState init_learner(Index input_dim, const TrainConfig& cfg,
                          std::vector<RelationPair> analogous_pairs = {});

/// Summed cross-entropy of a batch plus gradients for head and encoder.
struct BatchGradients {
  double loss = 0;
  Matrix head;
  EncoderGradients encoder;
};

BatchGradients batch_gradients(const Model& model, std::span<const Instance> batch);

/// Stage 1: new-task data only. Previous group at lr_prev when adversarial
/// tuning is on, else lr_cur.
void train_stage1(Model& model, const Task& task, const TrainConfig& cfg,
                  TrainObserver* observer = nullptr);

/// Stage 2: restores the previous group from `snapshot` when empirical
/// initialization is on, then trains every column at lr_cur on the replay set.
void train_stage2(Model& model, const MemoryBank& bank, const Task& task, const TrainConfig& cfg,
                  const HeadSnapshot& snapshot, TrainObserver* observer = nullptr);

/// grow -> snapshot -> stage 1 -> diagnostics -> exemplars -> stage 2 -> evaluate.
TaskMetrics run_task(LearnerState& state, const Task& task, const TrainConfig& cfg,
                     TrainObserver* observer = nullptr);

/// Relation split from cfg.seed, then every task in order. Splits the
/// instances with cfg.seed if the dataset carries no split.
/// `final_state`, when given, receives the learner after the last task.
RunMetrics run_sequence(const Dataset& dataset, const TrainConfig& cfg,
                        std::span<const RelationPair> analogous_pairs = {},
                        TrainObserver* observer = nullptr, LearnerState* final_state = nullptr);

/// The relation sets run_sequence uses for a dataset and config.
std::vector<std::vector<RelationId>> task_relations_for(const Dataset& dataset,
                                                        const TrainConfig& cfg,
                                                        std::span<const RelationPair> pairs);

struct MeanStd {
  double mean = 0;
  double stddev = 0;  // sample stddev, 0 for a single value
};

/// NaNs are skipped; an all-NaN input gives NaN mean.
MeanStd mean_std(std::span<const double> values);

/// Per-task accuracy statistics across seeds.
std::vector<MeanStd> summarize_accuracy(std::span<const RunMetrics> runs);

/// Seeds used by the training loop, derived from cfg.seed. Exposed so
/// independent reference implementations can reproduce the data order.
namespace seeds {
Seed encoder_init(Seed run_seed);
Seed task_split(Seed run_seed);
Seed head_init(Seed run_seed, std::size_t task_index);
Seed epoch_shuffle(Seed run_seed, std::size_t task_index, Stage stage, std::size_t epoch);
Seed replay_shuffle(Seed run_seed, std::size_t task_index);
Seed exemplars(Seed run_seed, std::size_t task_index, RelationId relation);
Seed instance_split(Seed run_seed);
}  // namespace seeds

}  // namespace cdec
