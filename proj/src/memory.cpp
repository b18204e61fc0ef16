#include "cdec/memory.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace cdec {

namespace {

constexpr int kMaxIterations = 100;
constexpr double kTolerance = 1e-6;

std::vector<Vector> kmeans_plus_plus(std::span<const Vector> points, std::size_t k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<Vector> centers;
  centers.reserve(k);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  centers.push_back(points[first(rng)]);

  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], (points[i] - centers.back()).squaredNorm());
      total += nearest[i];
    }
    std::size_t pick = 0;
    if (total > 0) {
      std::uniform_real_distribution<double> u(0.0, total);
      const double target = u(rng);
      double acc = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (nearest[i] == 0) continue;
        pick = i;
        acc += nearest[i];
        if (target < acc) break;
      }
    } else {
      // All remaining points coincide with a center.
      pick = first(rng);
    }
    centers.push_back(points[pick]);
  }
  return centers;
}

std::size_t nearest_center(const Vector& p, const std::vector<Vector>& centers) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = (p - centers[c]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

std::vector<Instance> select_exemplars(std::span<const Instance> instances,
                                       std::span<const Vector> reps, std::size_t k, Seed seed,
                                       ExemplarRule rule) {
  if (instances.size() != reps.size()) {
    throw std::invalid_argument("select_exemplars: " + std::to_string(instances.size()) +
                                " instances but " + std::to_string(reps.size()) + " reps");
  }
  const std::size_t n = instances.size();
  if (n <= k) {
    return {instances.begin(), instances.end()};
  }
  if (k == 0) {
    return {};
  }

  Rng rng(seed);
  std::vector<bool> chosen(n, false);

  if (rule == ExemplarRule::Random) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < k; ++i) {
      chosen[order[i]] = true;
    }
  } else {
    std::vector<Vector> centers = kmeans_plus_plus(reps, k, rng);
    std::vector<std::size_t> assignment(n, 0);
    for (int iter = 0; iter < kMaxIterations; ++iter) {
      for (std::size_t i = 0; i < n; ++i) {
        assignment[i] = nearest_center(reps[i], centers);
      }
      std::vector<Vector> sums(k, Vector::Zero(reps[0].size()));
      std::vector<std::size_t> counts(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        sums[assignment[i]] += reps[i];
        ++counts[assignment[i]];
      }
      double shift = 0;
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) {
          continue;  // empty cluster keeps its centroid
        }
        Vector updated = sums[c] / double(counts[c]);
        shift = std::max(shift, (updated - centers[c]).norm());
        centers[c] = std::move(updated);
      }
      if (shift < kTolerance) {
        break;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      assignment[i] = nearest_center(reps[i], centers);
    }

    // Each cluster's member nearest its centroid. Empty clusters go last and
    // fall back to the nearest instance not already chosen.
    std::vector<std::size_t> empty_clusters;
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t best = n;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (assignment[i] != c) continue;
        const double d = (reps[i] - centers[c]).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      if (best == n) {
        empty_clusters.push_back(c);
      } else {
        chosen[best] = true;
      }
    }
    for (std::size_t c : empty_clusters) {
      std::size_t best = n;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        const double d = (reps[i] - centers[c]).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      chosen[best] = true;
    }
  }

  std::vector<Instance> out;
  out.reserve(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (chosen[i]) {
      out.push_back(instances[i]);
    }
  }
  return out;
}

std::size_t MemoryBank::num_instances() const {
  std::size_t total = 0;
  for (const auto& [_, list] : store_) {
    total += list.size();
  }
  return total;
}

std::vector<RelationId> MemoryBank::relations() const {
  std::vector<RelationId> ids;
  ids.reserve(store_.size());
  for (const auto& [r, _] : store_) {
    ids.push_back(r);
  }
  return ids;
}

const std::vector<Instance>& MemoryBank::exemplars(RelationId relation) const {
  auto it = store_.find(relation);
  if (it == store_.end()) {
    throw std::out_of_range("memory bank: relation " + std::to_string(relation) + " not stored");
  }
  return it->second;
}

void MemoryBank::insert(RelationId relation, std::vector<Instance> exemplars) {
  if (store_.contains(relation)) {
    throw std::invalid_argument("memory bank: relation " + std::to_string(relation) +
                                " already stored");
  }
  if (exemplars.size() > capacity_) {
    throw std::invalid_argument("memory bank: " + std::to_string(exemplars.size()) +
                                " exemplars exceed capacity " + std::to_string(capacity_));
  }
  for (const auto& inst : exemplars) {
    if (inst.label != relation) {
      throw std::invalid_argument("memory bank: exemplar labeled " + std::to_string(inst.label) +
                                  " filed under relation " + std::to_string(relation));
    }
  }
  store_.emplace(relation, std::move(exemplars));
}

std::vector<Instance> replay_set(const MemoryBank& bank, Seed seed) {
  if (bank.empty()) {
    throw std::invalid_argument("replay_set: memory bank is empty");
  }
  std::vector<Instance> out;
  out.reserve(bank.num_instances());
  for (const auto& [_, list] : bank.store()) {
    out.insert(out.end(), list.begin(), list.end());
  }
  Rng rng(seed);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

void write_bank_dump(const MemoryBank& bank, std::ostream& out) {
  out << "relation_id,instance_id\n";
  for (const auto& [relation, list] : bank.store()) {
    for (const auto& inst : list) {
      out << relation << ',' << inst.id << '\n';
    }
  }
}

}  // namespace cdec
