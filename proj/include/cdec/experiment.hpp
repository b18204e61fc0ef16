#pragma once

#include "cdec/datastream.hpp"
#include "cdec/training.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdec {

/// Bad configuration or usage. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` experiment description. Lines starting with `#` are
/// comments. Unknown keys are rejected.
struct ExperimentConfig {
  /// "synthetic" or a path to an embedding CSV.
  std::string dataset = "synthetic";
  SyntheticSpec synthetic;  // its analogous_pairs mirror `analogous_pairs`
  Seed data_seed = 2023;
  /// Relation pairs tracked by the silhouette diagnostic and kept in separate tasks.
  std::vector<RelationPair> analogous_pairs = {{0, 1}, {2, 3}, {4, 5}, {6, 7}};
  LoadOptions load;

  TrainConfig train;
  std::vector<Seed> seeds = {11, 22, 33, 44, 55};
  std::vector<double> sweep_values = {0.0, 1e-6, 1e-5, 1e-4};
  std::filesystem::path out_dir = "results";
  /// Worker threads for independent runs; 0 picks the hardware concurrency.
  std::size_t threads = 0;
  bool dump_memory = false;
  bool save_checkpoints = false;

  /// Applies one `key=value` assignment. Throws ConfigError.
  void set(const std::string& key, const std::string& value);
  /// Every key with its current value, in the canonical text form.
  std::map<std::string, std::string> resolved() const;
  void validate() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Writes `resolved()` in the file format parse_config reads.
void write_config(const ExperimentConfig& cfg, std::ostream& out);

/// Generated or loaded dataset with a split assignment.
Dataset load_dataset(const ExperimentConfig& cfg);

using ObserverFactory = std::function<std::unique_ptr<TrainObserver>(const TrainConfig&)>;

/// One run_sequence per seed, executed on `cfg.threads` workers, returned in
/// seed order.
std::vector<RunMetrics> run_seeds(const Dataset& data, const ExperimentConfig& cfg,
                                  const TrainConfig& train, const ObserverFactory& observers = {});

/// Shortest round-trip decimal; "nan" for NaN.
std::string format_number(double value);

struct RunReport {
  std::vector<RunMetrics> runs;
  std::vector<MeanStd> accuracy;  // per task across seeds
};

struct AblationVariant {
  std::string name;
  bool empirical_init;
  bool adversarial_tuning;
};

/// Full framework, w/o empirical init, w/o adversarial tuning, w/o both.
const std::vector<AblationVariant>& ablation_variants();

struct AblationReport {
  std::vector<std::pair<AblationVariant, std::vector<RunMetrics>>> variants;
  MeanStd delta_full_vs_none;  // per-seed final-accuracy difference
};

struct SweepReport {
  std::vector<std::pair<double, std::vector<RunMetrics>>> points;
};

/// `run`: writes accuracy.csv and summary.json, prints the mean accuracy row.
RunReport cmd_run(const ExperimentConfig& cfg, std::ostream& log);
/// `ablation`: four strategy variants on identical data and seeds; ablation.csv.
AblationReport cmd_ablation(const ExperimentConfig& cfg, std::ostream& log);
/// `sweep`: one multi-seed run per lr_prev value; sweep.csv. A value of 0
/// additionally asserts that the previous classifier stays frozen in stage 1.
SweepReport cmd_sweep(const ExperimentConfig& cfg, std::ostream& log);

/// Raised by contract-checking observers.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Throws ContractViolation if the previous group changes during stage 1.
class FreezeCheck : public TrainObserver {
 public:
  void on_stage1_begin(const Task&, const Model& model, const HeadSnapshot&) override;
  void on_stage1_end(const Task& task, const Model& model) override;
  std::size_t tasks_checked() const { return checked_; }

 private:
  Matrix before_;
  std::size_t checked_ = 0;
};

/// Throws ContractViolation unless the previous group entering stage 2 equals
/// the pre-stage-1 snapshot.
class RestoreCheck : public TrainObserver {
 public:
  void on_stage1_begin(const Task&, const Model&, const HeadSnapshot& snap) override;
  void on_stage2_begin(const Task& task, const Model& model) override;
  std::size_t tasks_checked() const { return checked_; }

 private:
  HeadSnapshot snapshot_;
  std::size_t checked_ = 0;
};

}  // namespace cdec
