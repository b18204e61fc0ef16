#include "cdec/datastream.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>

namespace cdec {

namespace {

Vector random_unit(Index dim, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector v(dim);
  do {
    for (Index i = 0; i < dim; ++i) {
      v(i) = dist(rng);
    }
  } while (v.norm() == 0.0);
  return v.normalized();
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

[[noreturn]] void fail_line(std::size_t line_no, const std::string& what) {
  throw DataError("embedding file line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Valid:
      return "valid";
    case Split::Test:
      return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "valid") return Split::Valid;
  if (text == "test") return Split::Test;
  return std::nullopt;
}

std::vector<RelationId> Dataset::relations() const {
  std::set<RelationId> ids;
  for (const auto& inst : instances) {
    ids.insert(inst.label);
  }
  return {ids.begin(), ids.end()};
}

void SyntheticSpec::validate() const {
  if (num_relations < 2) throw DataError("synthetic spec: need at least 2 relations");
  if (per_relation < 5) throw DataError("synthetic spec: need at least 5 instances per relation");
  if (feature_dim < 1) throw DataError("synthetic spec: feature dim must be positive");
  if (!(spread > 0)) throw DataError("synthetic spec: spread must be positive");
  if (!(pair_offset > 0)) throw DataError("synthetic spec: pair offset must be positive");
  if (!(center_offset >= 0)) throw DataError("synthetic spec: center offset must be >= 0");
  std::set<RelationId> used;
  for (auto [a, b] : analogous_pairs) {
    if (a >= num_relations || b >= num_relations) {
      throw DataError("synthetic spec: pair (" + std::to_string(a) + ", " + std::to_string(b) +
                      ") references an unknown relation");
    }
    if (a == b || !used.insert(a).second || !used.insert(b).second) {
      throw DataError("synthetic spec: analogous pairs must be disjoint");
    }
  }
}

Dataset gen_synthetic(const SyntheticSpec& spec, Seed seed) {
  spec.validate();
  const double radius = 10.0 * spec.spread;
  const Index f = spec.feature_dim;

  Vector center = Vector::Zero(f);
  if (spec.center_offset > 0) {
    Rng center_rng(derive_seed(seed, "synthetic-center"));
    center = spec.center_offset * random_unit(f, center_rng);
  }

  Rng mean_rng(derive_seed(seed, "synthetic-means"));
  std::vector<Vector> means(spec.num_relations);
  std::vector<bool> paired(spec.num_relations, false);
  for (auto [a, b] : spec.analogous_pairs) {
    const Vector base = center + radius * random_unit(f, mean_rng);
    const Vector dir = random_unit(f, mean_rng);
    means[a] = base - 0.5 * spec.pair_offset * dir;
    means[b] = base + 0.5 * spec.pair_offset * dir;
    paired[a] = paired[b] = true;
  }
  for (std::size_t r = 0; r < spec.num_relations; ++r) {
    if (!paired[r]) {
      means[r] = center + radius * random_unit(f, mean_rng);
    }
  }

  Rng noise_rng(derive_seed(seed, "synthetic-noise"));
  std::normal_distribution<double> noise(0.0, spec.spread);
  Dataset out;
  out.instances.reserve(spec.num_relations * spec.per_relation);
  for (std::size_t r = 0; r < spec.num_relations; ++r) {
    for (std::size_t n = 0; n < spec.per_relation; ++n) {
      Instance inst;
      inst.id = out.instances.size();
      inst.label = static_cast<RelationId>(r);
      inst.features = means[r];
      for (Index i = 0; i < f; ++i) {
        inst.features(i) += noise(noise_rng);
      }
      out.instances.push_back(std::move(inst));
    }
  }
  return out;
}

std::vector<std::vector<RelationId>> split_tasks(std::span<const RelationId> relations,
                                                 std::size_t num_tasks, Seed seed,
                                                 std::span<const RelationPair> keep_apart) {
  if (num_tasks == 0) {
    throw DataError("split_tasks: need at least one task");
  }
  if (num_tasks > relations.size()) {
    throw DataError("split_tasks: " + std::to_string(num_tasks) + " tasks for only " +
                    std::to_string(relations.size()) + " relations");
  }
  const std::set<RelationId> distinct(relations.begin(), relations.end());
  if (distinct.size() != relations.size()) {
    throw DataError("split_tasks: duplicate relation ids");
  }

  // Task sizes: the first (R mod T) tasks take one extra relation.
  const std::size_t base = relations.size() / num_tasks;
  const std::size_t extra = relations.size() % num_tasks;

  std::vector<RelationId> order(relations.begin(), relations.end());
  Rng rng(derive_seed(seed, "split-tasks"));
  constexpr int kMaxAttempts = 10000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<RelationId>> tasks(num_tasks);
    std::unordered_map<RelationId, std::size_t> task_of;
    std::size_t pos = 0;
    for (std::size_t t = 0; t < num_tasks; ++t) {
      const std::size_t size = base + (t < extra ? 1 : 0);
      for (std::size_t i = 0; i < size; ++i, ++pos) {
        tasks[t].push_back(order[pos]);
        task_of[order[pos]] = t;
      }
    }
    bool ok = true;
    for (auto [a, b] : keep_apart) {
      auto ia = task_of.find(a);
      auto ib = task_of.find(b);
      if (ia != task_of.end() && ib != task_of.end() && ia->second == ib->second) {
        ok = false;
        break;
      }
    }
    if (ok) {
      return tasks;
    }
  }
  throw DataError("split_tasks: could not keep analogous pairs in separate tasks");
}

Dataset split_instances(Dataset dataset, Seed seed) {
  std::map<RelationId, std::vector<std::size_t>> by_relation;
  for (std::size_t i = 0; i < dataset.instances.size(); ++i) {
    by_relation[dataset.instances[i].label].push_back(i);
  }
  dataset.splits.assign(dataset.instances.size(), Split::Train);
  for (auto& [relation, members] : by_relation) {
    if (members.size() < 5) {
      throw DataError("split_instances: relation " + std::to_string(relation) + " has only " +
                      std::to_string(members.size()) + " instances (need 5)");
    }
    Rng rng(derive_seed(seed, "split-instances", relation));
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t fifth = members.size() / 5;
    const std::size_t n_train = members.size() - 2 * fifth;
    for (std::size_t k = 0; k < members.size(); ++k) {
      dataset.splits[members[k]] =
          k < n_train ? Split::Train : (k < n_train + fifth ? Split::Valid : Split::Test);
    }
  }
  return dataset;
}

std::vector<Task> build_tasks(const Dataset& dataset,
                              const std::vector<std::vector<RelationId>>& task_relations) {
  if (!dataset.has_splits()) {
    throw DataError("build_tasks: dataset has no train/valid/test assignment");
  }
  std::unordered_map<RelationId, std::size_t> task_of;
  for (std::size_t t = 0; t < task_relations.size(); ++t) {
    for (RelationId r : task_relations[t]) {
      if (!task_of.emplace(r, t).second) {
        throw DataError("build_tasks: relation " + std::to_string(r) + " assigned twice");
      }
    }
  }
  std::vector<Task> tasks(task_relations.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    tasks[t].index = t + 1;
    tasks[t].relations = task_relations[t];
  }
  for (std::size_t i = 0; i < dataset.instances.size(); ++i) {
    const Instance& inst = dataset.instances[i];
    auto it = task_of.find(inst.label);
    if (it == task_of.end()) {
      continue;
    }
    Task& task = tasks[it->second];
    switch (dataset.splits[i]) {
      case Split::Train:
        task.train.push_back(inst);
        break;
      case Split::Valid:
        task.valid.push_back(inst);
        break;
      case Split::Test:
        task.test.push_back(inst);
        break;
    }
  }
  return tasks;
}

Dataset load_embeddings(std::istream& in, const LoadOptions& options) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw DataError("embedding file: empty input");
  }
  ++line_no;
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "relation_id" || header[1] != "split") {
    fail_line(line_no, "header must start with relation_id,split and list at least one feature");
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t k = 0; k < dim; ++k) {
    if (header[k + 2] != "f" + std::to_string(k)) {
      fail_line(line_no, "expected feature column f" + std::to_string(k));
    }
  }

  Dataset out;
  std::map<std::pair<RelationId, Split>, std::size_t> taken;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() != dim + 2) {
      fail_line(line_no, "expected " + std::to_string(dim + 2) + " cells, found " +
                             std::to_string(cells.size()));
    }
    RelationId label = 0;
    {
      auto [ptr, ec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), label);
      if (ec != std::errc() || ptr != cells[0].data() + cells[0].size()) {
        fail_line(line_no, "relation_id '" + std::string(cells[0]) + "' is not a non-negative integer");
      }
    }
    const auto split = parse_split(cells[1]);
    if (!split) {
      fail_line(line_no, "split '" + std::string(cells[1]) + "' is not train, valid or test");
    }
    Vector features(static_cast<Index>(dim));
    for (std::size_t k = 0; k < dim; ++k) {
      const auto cell = cells[k + 2];
      double value = 0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        fail_line(line_no, "feature f" + std::to_string(k) + " '" + std::string(cell) +
                               "' is not a finite decimal number");
      }
      features(static_cast<Index>(k)) = value;
    }

    std::size_t& count = taken[{label, *split}];
    if ((*split == Split::Train && options.max_train_per_relation &&
         count >= *options.max_train_per_relation) ||
        (*split == Split::Test && options.max_test_per_relation &&
         count >= *options.max_test_per_relation)) {
      continue;
    }
    ++count;
    Instance inst;
    inst.id = out.instances.size();
    inst.features = std::move(features);
    inst.label = label;
    out.instances.push_back(std::move(inst));
    out.splits.push_back(*split);
  }
  return out;
}

Dataset load_embeddings(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open embedding file " + path.string());
  }
  return load_embeddings(in, options);
}

void write_embeddings(const Dataset& dataset, std::ostream& out) {
  if (!dataset.has_splits()) {
    throw DataError("write_embeddings: dataset has no split assignment");
  }
  const Index dim = dataset.feature_dim();
  out << "relation_id,split";
  for (Index k = 0; k < dim; ++k) {
    out << ",f" << k;
  }
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < dataset.instances.size(); ++i) {
    const Instance& inst = dataset.instances[i];
    if (inst.features.size() != dim) {
      throw DataError("write_embeddings: inconsistent feature dims");
    }
    out << inst.label << ',' << to_string(dataset.splits[i]);
    for (Index k = 0; k < dim; ++k) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), inst.features(k));
      out << ',' << std::string_view(buf, ptr - buf);
    }
    out << '\n';
  }
}

void write_embeddings(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot open " + path.string() + " for writing");
  }
  write_embeddings(dataset, out);
}

}  // namespace cdec
