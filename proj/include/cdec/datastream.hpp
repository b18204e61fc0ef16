#pragma once

#include "cdec/model.hpp"
#include "cdec/numerics.hpp"
#include "cdec/random.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

namespace cdec {

/// Bad input data, such as a malformed file or an invalid generator spec.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Instance {
  std::size_t id = 0;  // position in the source dataset
  Vector features;
  RelationId label = 0;
};

enum class Split : std::uint8_t { Train, Valid, Test };

std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view text);

/// Labeled instances, optionally tagged with a train/valid/test split.
struct Dataset {
  std::vector<Instance> instances;
  std::vector<Split> splits;  // empty, or one per instance

  bool has_splits() const { return !instances.empty() && splits.size() == instances.size(); }
  Index feature_dim() const { return instances.empty() ? 0 : instances.front().features.size(); }
  /// Sorted distinct labels.
  std::vector<RelationId> relations() const;
};

using RelationPair = std::pair<RelationId, RelationId>;

struct SyntheticSpec {
  std::size_t num_relations = 40;
  std::size_t per_relation = 100;
  Index feature_dim = 32;
  double spread = 0.1;       // per-coordinate stddev of every cluster
  double pair_offset = 0.1;  // distance between the means of an analogous pair
  /// Distance of the shared sphere center from the origin. A nonzero center
  /// gives every relation a common feature component, which is what lets a
  /// freshly trained head drift toward the newest relations.
  double center_offset = 2.0;
  std::vector<RelationPair> analogous_pairs = {{0, 1}, {2, 3}, {4, 5}, {6, 7}};

  /// Throws DataError describing the first violated constraint.
  void validate() const;
};

/// Gaussian clusters, one per relation. Unpaired means lie on a sphere of
/// radius 10 * spread (centered `center_offset` from the origin); each
/// analogous pair straddles a shared point on that sphere, `pair_offset` apart
/// along a random direction.
Dataset gen_synthetic(const SyntheticSpec& spec, Seed seed);

/// Seeded partition of relations into `num_tasks` near-equal sets. Relations
/// in `keep_apart` pairs never share a set.
std::vector<std::vector<RelationId>> split_tasks(std::span<const RelationId> relations,
                                                 std::size_t num_tasks, Seed seed,
                                                 std::span<const RelationPair> keep_apart = {});

/// Per-relation stratified 3:1:1 train/valid/test assignment.
Dataset split_instances(Dataset dataset, Seed seed);

struct Task {
  std::size_t index = 0;  // 1-based
  std::vector<RelationId> relations;
  std::vector<Instance> train;
  std::vector<Instance> valid;
  std::vector<Instance> test;
};

/// Slices a split dataset into tasks following `task_relations`.
std::vector<Task> build_tasks(const Dataset& dataset,
                              const std::vector<std::vector<RelationId>>& task_relations);

struct LoadOptions {
  std::optional<std::size_t> max_train_per_relation;
  std::optional<std::size_t> max_test_per_relation;
};

/// Embedding CSV: `relation_id,split,f0,...,f{F-1}` header, one instance per row.
Dataset load_embeddings(std::istream& in, const LoadOptions& options = {});
Dataset load_embeddings(const std::filesystem::path& path, const LoadOptions& options = {});

/// Writes with round-trip precision; requires a split dataset.
void write_embeddings(const Dataset& dataset, std::ostream& out);
void write_embeddings(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace cdec
