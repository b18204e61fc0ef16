#include "cdec/experiment.hpp"

#include "cdec/checkpoint.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace cdec {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw ConfigError("config: " + key + " = '" + value + "' is not " + want);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    bad_value(key, value, "a non-negative integer");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    bad_value(key, value, "a finite number");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  bad_value(key, value, "a boolean (true/false)");
}

std::vector<RelationPair> parse_pairs(const std::string& key, const std::string& value) {
  std::vector<RelationPair> out;
  for (const auto& item : split_list(value)) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) bad_value(key, value, "a list of a-b relation pairs");
    out.emplace_back(parse_integer<RelationId>(key, trim(item.substr(0, dash))),
                     parse_integer<RelationId>(key, trim(item.substr(dash + 1))));
  }
  return out;
}

std::string join_pairs(const std::vector<RelationPair>& pairs) {
  std::string out;
  for (const auto& [a, b] : pairs) {
    if (!out.empty()) out += ',';
    out += std::to_string(a) + "-" + std::to_string(b);
  }
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& fmt) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ',';
    out += fmt(item);
  }
  return out;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

/// Calls `job(i)` for i in [0, n) on up to `threads` workers; rethrows the
/// first failure.
template <typename Job>
void parallel_for(std::size_t n, std::size_t threads, Job&& job) {
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  threads = std::min(threads, n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  return out;
}

void prepare_out_dir(const ExperimentConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory " + cfg.out_dir.string() + ": " +
                             ec.message());
  }
}

nlohmann::json number_json(double v) {
  return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
}

nlohmann::json mean_std_json(const MeanStd& m) {
  return {{"mean", number_json(m.mean)}, {"stddev", number_json(m.stddev)}};
}

nlohmann::json config_json(const ExperimentConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : cfg.resolved()) j[k] = v;
  return j;
}

std::vector<double> final_accuracies(const std::vector<RunMetrics>& runs) {
  std::vector<double> out;
  for (const auto& r : runs) out.push_back(r.final_accuracy());
  return out;
}

template <typename Field>
MeanStd task_stat(const std::vector<RunMetrics>& runs, std::size_t t, Field field) {
  std::vector<double> vals;
  for (const auto& r : runs) {
    if (t < r.tasks.size()) vals.push_back(field(r.tasks[t]));
  }
  return mean_std(vals);
}

void write_accuracy_csv(const std::vector<RunMetrics>& runs, std::ostream& out) {
  out << "# cdec accuracy v1\n";
  out << "seed,task_index,accuracy,prev_f1_mean,prev_prob_mass,pair_silhouette\n";
  for (const auto& run : runs) {
    for (const auto& t : run.tasks) {
      out << run.seed << ',' << t.task_index << ',' << format_number(t.accuracy) << ','
          << format_number(t.prev_f1_mean) << ',' << format_number(t.prev_prob_mass) << ','
          << format_number(t.pair_silhouette) << '\n';
    }
  }
}

nlohmann::json runs_summary_json(const std::vector<RunMetrics>& runs) {
  nlohmann::json tasks = nlohmann::json::array();
  std::size_t len = 0;
  for (const auto& r : runs) len = std::max(len, r.tasks.size());
  for (std::size_t t = 0; t < len; ++t) {
    tasks.push_back({
        {"task_index", t + 1},
        {"accuracy", mean_std_json(task_stat(runs, t, [](const TaskMetrics& m) { return m.accuracy; }))},
        {"prev_f1_mean",
         mean_std_json(task_stat(runs, t, [](const TaskMetrics& m) { return m.prev_f1_mean; }))},
        {"prev_prob_mass",
         mean_std_json(task_stat(runs, t, [](const TaskMetrics& m) { return m.prev_prob_mass; }))},
        {"pair_silhouette",
         mean_std_json(task_stat(runs, t, [](const TaskMetrics& m) { return m.pair_silhouette; }))},
    });
  }
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& r : runs) seeds.push_back(r.seed);
  return {{"seeds", seeds},
          {"tasks", tasks},
          {"final_accuracy", mean_std_json(mean_std(final_accuracies(runs)))}};
}

void print_accuracy_row(const std::string& label, const std::vector<MeanStd>& acc, std::ostream& log) {
  log << std::left << std::setw(28) << label;
  for (std::size_t t = 0; t < acc.size(); ++t) {
    log << "  T" << std::setw(3) << (t + 1);
  }
  log << '\n' << std::setw(28) << "";
  log << std::right << std::fixed << std::setprecision(1);
  for (const auto& m : acc) {
    log << std::setw(6) << 100.0 * m.mean;
  }
  log << '\n';
  log.unsetf(std::ios::floatfield);
}

TrainConfig seeded(TrainConfig base, Seed seed) {
  base.seed = seed;
  return base;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  auto& t = train;
  if (key == "dataset") {
    if (value.empty()) bad_value(key, value, "a dataset source");
    dataset = value;
  } else if (key == "data_seed") {
    data_seed = parse_integer<Seed>(key, value);
  } else if (key == "pairs") {
    analogous_pairs = parse_pairs(key, value);
  } else if (key == "synthetic.num_relations") {
    synthetic.num_relations = parse_integer<std::size_t>(key, value);
  } else if (key == "synthetic.per_relation") {
    synthetic.per_relation = parse_integer<std::size_t>(key, value);
  } else if (key == "synthetic.feature_dim") {
    synthetic.feature_dim = parse_integer<Index>(key, value);
  } else if (key == "synthetic.spread") {
    synthetic.spread = parse_real(key, value);
  } else if (key == "synthetic.pair_offset") {
    synthetic.pair_offset = parse_real(key, value);
  } else if (key == "synthetic.center_offset") {
    synthetic.center_offset = parse_real(key, value);
  } else if (key == "max_train_per_relation") {
    const auto n = parse_integer<std::size_t>(key, value);
    load.max_train_per_relation = n == 0 ? std::nullopt : std::optional(n);
  } else if (key == "max_test_per_relation") {
    const auto n = parse_integer<std::size_t>(key, value);
    load.max_test_per_relation = n == 0 ? std::nullopt : std::optional(n);
  } else if (key == "epochs_stage1") {
    t.epochs_stage1 = parse_integer<std::size_t>(key, value);
  } else if (key == "epochs_stage2") {
    t.epochs_stage2 = parse_integer<std::size_t>(key, value);
  } else if (key == "batch_size") {
    t.batch_size = parse_integer<std::size_t>(key, value);
  } else if (key == "lr_cur") {
    t.lr_cur = parse_real(key, value);
  } else if (key == "lr_prev") {
    t.lr_prev = parse_real(key, value);
  } else if (key == "lr_encoder") {
    t.lr_encoder = parse_real(key, value);
  } else if (key == "use_empirical_init") {
    t.use_empirical_init = parse_bool(key, value);
  } else if (key == "use_adversarial_tuning") {
    t.use_adversarial_tuning = parse_bool(key, value);
  } else if (key == "slow_encoder_stage1") {
    t.slow_encoder_stage1 = parse_bool(key, value);
  } else if (key == "hidden_dim") {
    t.hidden_dim = parse_integer<Index>(key, value);
  } else if (key == "representation_dim") {
    t.representation_dim = parse_integer<Index>(key, value);
  } else if (key == "num_tasks") {
    t.num_tasks = parse_integer<std::size_t>(key, value);
  } else if (key == "memory_size") {
    t.memory_size = parse_integer<std::size_t>(key, value);
  } else if (key == "exemplar_rule") {
    if (value == "kmeans") {
      t.exemplar_rule = ExemplarRule::KMeans;
    } else if (value == "random") {
      t.exemplar_rule = ExemplarRule::Random;
    } else {
      bad_value(key, value, "kmeans or random");
    }
  } else if (key == "separate_pairs") {
    t.separate_pairs = parse_bool(key, value);
  } else if (key == "seeds") {
    seeds.clear();
    for (const auto& s : split_list(value)) seeds.push_back(parse_integer<Seed>(key, s));
  } else if (key == "sweep_values") {
    sweep_values.clear();
    for (const auto& s : split_list(value)) sweep_values.push_back(parse_real(key, s));
  } else if (key == "out") {
    if (value.empty()) bad_value(key, value, "a directory");
    out_dir = value;
  } else if (key == "threads") {
    threads = parse_integer<std::size_t>(key, value);
  } else if (key == "dump_memory") {
    dump_memory = parse_bool(key, value);
  } else if (key == "save_checkpoints") {
    save_checkpoints = parse_bool(key, value);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

std::map<std::string, std::string> ExperimentConfig::resolved() const {
  const auto& t = train;
  return {
      {"dataset", dataset},
      {"data_seed", std::to_string(data_seed)},
      {"pairs", join_pairs(analogous_pairs)},
      {"synthetic.num_relations", std::to_string(synthetic.num_relations)},
      {"synthetic.per_relation", std::to_string(synthetic.per_relation)},
      {"synthetic.feature_dim", std::to_string(synthetic.feature_dim)},
      {"synthetic.spread", format_number(synthetic.spread)},
      {"synthetic.pair_offset", format_number(synthetic.pair_offset)},
      {"synthetic.center_offset", format_number(synthetic.center_offset)},
      {"max_train_per_relation", std::to_string(load.max_train_per_relation.value_or(0))},
      {"max_test_per_relation", std::to_string(load.max_test_per_relation.value_or(0))},
      {"epochs_stage1", std::to_string(t.epochs_stage1)},
      {"epochs_stage2", std::to_string(t.epochs_stage2)},
      {"batch_size", std::to_string(t.batch_size)},
      {"lr_cur", format_number(t.lr_cur)},
      {"lr_prev", format_number(t.lr_prev)},
      {"lr_encoder", format_number(t.lr_encoder)},
      {"use_empirical_init", bool_str(t.use_empirical_init)},
      {"use_adversarial_tuning", bool_str(t.use_adversarial_tuning)},
      {"slow_encoder_stage1", bool_str(t.slow_encoder_stage1)},
      {"hidden_dim", std::to_string(t.hidden_dim)},
      {"representation_dim", std::to_string(t.representation_dim)},
      {"num_tasks", std::to_string(t.num_tasks)},
      {"memory_size", std::to_string(t.memory_size)},
      {"exemplar_rule", t.exemplar_rule == ExemplarRule::KMeans ? "kmeans" : "random"},
      {"separate_pairs", bool_str(t.separate_pairs)},
      {"seeds", join(seeds, [](Seed s) { return std::to_string(s); })},
      {"sweep_values", join(sweep_values, [](double v) { return format_number(v); })},
      {"out", out_dir.string()},
      {"threads", std::to_string(threads)},
      {"dump_memory", bool_str(dump_memory)},
      {"save_checkpoints", bool_str(save_checkpoints)},
  };
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("config: at least one seed is required");
  if (sweep_values.empty()) throw ConfigError("config: sweep_values must not be empty");
  for (double v : sweep_values) {
    if (!(v >= 0)) throw ConfigError("config: sweep value " + format_number(v) + " is negative");
  }
  try {
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (dataset == "synthetic") {
    SyntheticSpec spec = synthetic;
    spec.analogous_pairs = analogous_pairs;
    try {
      spec.validate();
    } catch (const DataError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    if (train.num_tasks > spec.num_relations) {
      throw ConfigError("config: num_tasks exceeds synthetic.num_relations");
    }
  } else if (!std::filesystem::is_regular_file(dataset)) {
    throw ConfigError("config: dataset file not found: " + dataset);
  }
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    cfg.set(trim(text.substr(0, eq)), text.substr(eq + 1));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  return parse_config(in);
}

void write_config(const ExperimentConfig& cfg, std::ostream& out) {
  for (const auto& [k, v] : cfg.resolved()) {
    out << k << " = " << v << '\n';
  }
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset == "synthetic") {
    SyntheticSpec spec = cfg.synthetic;
    spec.analogous_pairs = cfg.analogous_pairs;
    return split_instances(gen_synthetic(spec, cfg.data_seed), derive_seed(cfg.data_seed, "split"));
  }
  if (!std::filesystem::is_regular_file(cfg.dataset)) {
    throw ConfigError("dataset file not found: " + cfg.dataset);
  }
  return load_embeddings(std::filesystem::path(cfg.dataset), cfg.load);
}

std::vector<RunMetrics> run_seeds(const Dataset& data, const ExperimentConfig& cfg,
                                  const TrainConfig& train, const ObserverFactory& observers) {
  std::vector<RunMetrics> runs(cfg.seeds.size());
  const bool keep_state = cfg.dump_memory || cfg.save_checkpoints;
  parallel_for(cfg.seeds.size(), cfg.threads, [&](std::size_t i) {
    const TrainConfig tc = seeded(train, cfg.seeds[i]);
    std::unique_ptr<TrainObserver> obs = observers ? observers(tc) : nullptr;
    LearnerState final_state;
    runs[i] = run_sequence(data, tc, cfg.analogous_pairs, obs.get(), keep_state ? &final_state : nullptr);
    if (keep_state) {
      const std::string tag = "seed" + std::to_string(tc.seed);
      if (cfg.dump_memory) {
        auto out = open_output(cfg.out_dir / ("memory_" + tag + ".csv"));
        write_bank_dump(final_state.bank, out);
      }
      if (cfg.save_checkpoints) {
        save_checkpoint(final_state.model, cfg.out_dir / ("model_" + tag + ".ckpt"));
      }
    }
  });
  return runs;
}

RunReport cmd_run(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  prepare_out_dir(cfg);
  const Dataset data = load_dataset(cfg);

  RunReport report;
  report.runs = run_seeds(data, cfg, cfg.train);
  report.accuracy = summarize_accuracy(report.runs);

  {
    auto out = open_output(cfg.out_dir / "accuracy.csv");
    write_accuracy_csv(report.runs, out);
  }
  {
    nlohmann::json summary = runs_summary_json(report.runs);
    summary["schema"] = "cdec-summary/1";
    summary["command"] = "run";
    summary["config"] = config_json(cfg);
    summary["notes"] = {
        {"prev_prob_mass", "mean softmax mass on previous relations at the end of stage 1"},
        {"pair_silhouette", "silhouette of analogous-pair representations at the end of stage 1"}};
    auto out = open_output(cfg.out_dir / "summary.json");
    out << summary.dump(2) << '\n';
  }
  print_accuracy_row("mean accuracy (%)", report.accuracy, log);
  return report;
}

const std::vector<AblationVariant>& ablation_variants() {
  static const std::vector<AblationVariant> variants = {
      {"full", true, true},
      {"wo_empirical_init", false, true},
      {"wo_adversarial_tuning", true, false},
      {"wo_both", false, false},
  };
  return variants;
}

AblationReport cmd_ablation(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  prepare_out_dir(cfg);
  const Dataset data = load_dataset(cfg);
  const auto& variants = ablation_variants();
  const std::size_t n_seeds = cfg.seeds.size();

  std::vector<RunMetrics> flat(variants.size() * n_seeds);
  parallel_for(flat.size(), cfg.threads, [&](std::size_t job) {
    const AblationVariant& v = variants[job / n_seeds];
    TrainConfig tc = seeded(cfg.train, cfg.seeds[job % n_seeds]);
    tc.use_empirical_init = v.empirical_init;
    tc.use_adversarial_tuning = v.adversarial_tuning;
    flat[job] = run_sequence(data, tc, cfg.analogous_pairs);
  });

  AblationReport report;
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    report.variants.emplace_back(variants[vi],
                                 std::vector<RunMetrics>(flat.begin() + vi * n_seeds,
                                                         flat.begin() + (vi + 1) * n_seeds));
  }
  const auto full = final_accuracies(report.variants.front().second);
  const auto none = final_accuracies(report.variants.back().second);
  std::vector<double> deltas;
  for (std::size_t i = 0; i < n_seeds; ++i) deltas.push_back(full[i] - none[i]);
  report.delta_full_vs_none = mean_std(deltas);

  {
    auto out = open_output(cfg.out_dir / "ablation.csv");
    out << "# cdec ablation v1\n";
    out << "variant,seed,final_accuracy\n";
    for (const auto& [v, runs] : report.variants) {
      for (const auto& r : runs) {
        out << v.name << ',' << r.seed << ',' << format_number(r.final_accuracy()) << '\n';
      }
    }
    for (const auto& [v, runs] : report.variants) {
      const MeanStd m = mean_std(final_accuracies(runs));
      out << v.name << ",mean," << format_number(m.mean) << '\n';
      out << v.name << ",stddev," << format_number(m.stddev) << '\n';
    }
    out << "full_minus_wo_both,mean," << format_number(report.delta_full_vs_none.mean) << '\n';
    out << "full_minus_wo_both,stddev," << format_number(report.delta_full_vs_none.stddev) << '\n';
  }
  {
    nlohmann::json summary;
    summary["schema"] = "cdec-summary/1";
    summary["command"] = "ablation";
    summary["config"] = config_json(cfg);
    nlohmann::json vs = nlohmann::json::array();
    for (const auto& [v, runs] : report.variants) {
      nlohmann::json entry = runs_summary_json(runs);
      entry["variant"] = v.name;
      entry["use_empirical_init"] = v.empirical_init;
      entry["use_adversarial_tuning"] = v.adversarial_tuning;
      vs.push_back(entry);
    }
    summary["variants"] = vs;
    summary["full_minus_wo_both"] = mean_std_json(report.delta_full_vs_none);
    auto out = open_output(cfg.out_dir / "summary.json");
    out << summary.dump(2) << '\n';
  }

  log << std::left << std::setw(28) << "variant" << "final accuracy (%)\n";
  for (const auto& [v, runs] : report.variants) {
    const MeanStd m = mean_std(final_accuracies(runs));
    log << std::left << std::setw(28) << v.name << std::fixed << std::setprecision(2)
        << 100 * m.mean << " +- " << 100 * m.stddev << '\n';
  }
  log << std::left << std::setw(28) << "full - wo_both" << std::fixed << std::setprecision(2)
      << 100 * report.delta_full_vs_none.mean << " +- " << 100 * report.delta_full_vs_none.stddev
      << '\n';
  log.unsetf(std::ios::floatfield);
  return report;
}

SweepReport cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  prepare_out_dir(cfg);
  const Dataset data = load_dataset(cfg);
  const std::size_t n_seeds = cfg.seeds.size();
  const auto& values = cfg.sweep_values;

  std::vector<RunMetrics> flat(values.size() * n_seeds);
  std::atomic<std::size_t> frozen_tasks{0};
  parallel_for(flat.size(), cfg.threads, [&](std::size_t job) {
    TrainConfig tc = seeded(cfg.train, cfg.seeds[job % n_seeds]);
    tc.lr_prev = values[job / n_seeds];
    std::unique_ptr<FreezeCheck> check;
    if (tc.lr_prev == 0 && tc.use_adversarial_tuning) {
      check = std::make_unique<FreezeCheck>();
    }
    flat[job] = run_sequence(data, tc, cfg.analogous_pairs, check.get());
    if (check) frozen_tasks += check->tasks_checked();
  });

  SweepReport report;
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    report.points.emplace_back(values[vi],
                               std::vector<RunMetrics>(flat.begin() + vi * n_seeds,
                                                       flat.begin() + (vi + 1) * n_seeds));
  }

  {
    auto out = open_output(cfg.out_dir / "sweep.csv");
    out << "# cdec sweep v1\n";
    out << "lr_prev,mean_final_accuracy,stddev_final_accuracy,num_seeds\n";
    for (const auto& [v, runs] : report.points) {
      const MeanStd m = mean_std(final_accuracies(runs));
      out << format_number(v) << ',' << format_number(m.mean) << ',' << format_number(m.stddev)
          << ',' << runs.size() << '\n';
    }
  }
  {
    nlohmann::json summary;
    summary["schema"] = "cdec-summary/1";
    summary["command"] = "sweep";
    summary["config"] = config_json(cfg);
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& [v, runs] : report.points) {
      nlohmann::json entry = runs_summary_json(runs);
      entry["lr_prev"] = v;
      pts.push_back(entry);
    }
    summary["points"] = pts;
    auto out = open_output(cfg.out_dir / "summary.json");
    out << summary.dump(2) << '\n';
  }

  log << std::left << std::setw(12) << "lr_prev" << "final accuracy (%)\n";
  for (const auto& [v, runs] : report.points) {
    const MeanStd m = mean_std(final_accuracies(runs));
    log << std::left << std::setw(12) << format_number(v) << std::fixed << std::setprecision(2)
        << 100 * m.mean << " +- " << 100 * m.stddev << '\n';
    log.unsetf(std::ios::floatfield);
  }
  if (frozen_tasks > 0) {
    log << "freeze check: previous classifier unchanged through stage 1 in " << frozen_tasks
        << " tasks\n";
  }
  return report;
}

void FreezeCheck::on_stage1_begin(const Task&, const Model& model, const HeadSnapshot&) {
  before_ = model.head.prev_columns();
}

void FreezeCheck::on_stage1_end(const Task& task, const Model& model) {
  if (!bit_identical(before_, model.head.prev_columns())) {
    throw ContractViolation("freeze check: previous classifier changed during stage 1 of task " +
                            std::to_string(task.index));
  }
  ++checked_;
}

void RestoreCheck::on_stage1_begin(const Task&, const Model&, const HeadSnapshot& snap) {
  snapshot_ = snap;
}

void RestoreCheck::on_stage2_begin(const Task& task, const Model& model) {
  if (!bit_identical(snapshot_.columns(), model.head.prev_columns())) {
    throw ContractViolation("restore check: previous classifier entering stage 2 of task " +
                            std::to_string(task.index) + " differs from the snapshot");
  }
  ++checked_;
}

}  // namespace cdec
