#pragma once

#include "cdec/datastream.hpp"

#include <iosfwd>
#include <map>
#include <span>
#include <vector>

namespace cdec {

enum class ExemplarRule : std::uint8_t { KMeans, Random };

/// Picks up to `k` representative instances. With fewer than `k` candidates all
/// are returned. Otherwise k-means (k-means++ init from `seed`, at most 100
/// Lloyd iterations, tolerance 1e-6 on centroid movement) runs on `reps`, and
/// each cluster contributes the member nearest its centroid, ties to the lowest
/// index. Output preserves input order.
std::vector<Instance> select_exemplars(std::span<const Instance> instances,
                                       std::span<const Vector> reps, std::size_t k, Seed seed,
                                       ExemplarRule rule = ExemplarRule::KMeans);

/// Per-relation exemplar store with a fixed capacity per relation.
class MemoryBank {
 public:
  explicit MemoryBank(std::size_t capacity = 10) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  bool contains(RelationId relation) const { return store_.contains(relation); }
  bool empty() const { return store_.empty(); }
  std::size_t num_relations() const { return store_.size(); }
  std::size_t num_instances() const;
  std::vector<RelationId> relations() const;
  const std::vector<Instance>& exemplars(RelationId relation) const;
  const std::map<RelationId, std::vector<Instance>>& store() const { return store_; }

  /// Rejects a relation that is already stored. At most capacity() exemplars,
  /// each labeled `relation`.
  void insert(RelationId relation, std::vector<Instance> exemplars);

 private:
  std::size_t capacity_;
  std::map<RelationId, std::vector<Instance>> store_;
};

inline void update_bank(MemoryBank& bank, RelationId relation, std::vector<Instance> exemplars) {
  bank.insert(relation, std::move(exemplars));
}

/// Every stored exemplar, relation-major, then shuffled by `seed`.
std::vector<Instance> replay_set(const MemoryBank& bank, Seed seed);

/// Audit dump: one `relation_id,instance_id` line per stored exemplar.
void write_bank_dump(const MemoryBank& bank, std::ostream& out);

}  // namespace cdec
