#include "cdec/eval.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace cdec {

Index argmax_lowest(const Vector& scores) {
  if (scores.size() == 0) {
    throw std::invalid_argument("argmax: empty scores");
  }
  Index best = 0;
  for (Index j = 1; j < scores.size(); ++j) {
    if (scores(j) > scores(best)) {
      best = j;
    }
  }
  return best;
}

Index predict_column(const Encoder& enc, const ClassifierHead& head, const Vector& features) {
  // Softmax is monotone, so logits give the same argmax.
  return argmax_lowest(head_logits(head, encode(enc, features)));
}

std::vector<Vector> representations(const Encoder& enc, std::span<const Instance> instances) {
  std::vector<Vector> reps;
  reps.reserve(instances.size());
  for (const auto& inst : instances) {
    reps.push_back(encode(enc, inst.features));
  }
  return reps;
}

double accuracy_all_seen(const Encoder& enc, const ClassifierHead& head,
                         std::span<const Instance> instances) {
  if (instances.empty()) {
    throw std::invalid_argument("accuracy_all_seen: no instances");
  }
  std::size_t correct = 0;
  for (const auto& inst : instances) {
    const auto col = head.column_of(inst.label);
    if (!col) {
      throw std::invalid_argument("accuracy_all_seen: relation " + std::to_string(inst.label) +
                                  " has no classifier column");
    }
    if (predict_column(enc, head, inst.features) == *col) {
      ++correct;
    }
  }
  return double(correct) / double(instances.size());
}

double accuracy_all_seen(const Encoder& enc, const ClassifierHead& head,
                         std::span<const Task> tasks) {
  std::vector<Instance> pooled;
  for (const auto& task : tasks) {
    pooled.insert(pooled.end(), task.test.begin(), task.test.end());
  }
  return accuracy_all_seen(enc, head, pooled);
}

double RelationCounts::precision() const {
  return tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
}

double RelationCounts::recall() const {
  return tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
}

double RelationCounts::f1() const {
  const double p = precision();
  const double r = recall();
  return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
}

void ConfusionTally::add(RelationId truth, RelationId predicted) {
  ++total;
  if (truth == predicted) {
    ++correct;
    ++counts[truth].tp;
  } else {
    ++counts[truth].fn;
    ++counts[predicted].fp;
  }
}

const RelationCounts& ConfusionTally::at(RelationId relation) const {
  static const RelationCounts kEmpty{};
  auto it = counts.find(relation);
  return it == counts.end() ? kEmpty : it->second;
}

ConfusionTally tally(const Encoder& enc, const ClassifierHead& head,
                     std::span<const Instance> instances) {
  ConfusionTally out;
  for (const auto& inst : instances) {
    const Index col = predict_column(enc, head, inst.features);
    out.add(inst.label, head.relation_ids()[static_cast<std::size_t>(col)]);
  }
  return out;
}

std::map<RelationId, double> per_relation_f1(const Encoder& enc, const ClassifierHead& head,
                                             std::span<const Instance> instances,
                                             std::span<const RelationId> relations) {
  if (relations.empty()) {
    throw std::invalid_argument("per_relation_f1: empty relation subset");
  }
  const ConfusionTally t = tally(enc, head, instances);
  std::map<RelationId, double> out;
  for (RelationId r : relations) {
    out[r] = t.at(r).f1();
  }
  return out;
}

double prev_prob_mass(const Encoder& enc, const ClassifierHead& head,
                      std::span<const Instance> instances) {
  if (head.boundary() == 0) {
    throw std::invalid_argument("prev_prob_mass: head has no previous relations");
  }
  if (instances.empty()) {
    throw std::invalid_argument("prev_prob_mass: no instances");
  }
  double total = 0;
  for (const auto& inst : instances) {
    total += forward(enc, head, inst.features).head(head.boundary()).sum();
  }
  return total / double(instances.size());
}

double pair_silhouette(std::span<const Vector> reps, std::span<const int> labels) {
  if (reps.size() != labels.size()) {
    throw std::invalid_argument("pair_silhouette: reps and labels differ in length");
  }
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() != 2) {
    throw std::invalid_argument("pair_silhouette: need exactly two classes, found " +
                                std::to_string(classes.size()));
  }
  const auto n0 = std::count(labels.begin(), labels.end(), classes[0]);
  const auto n1 = std::count(labels.begin(), labels.end(), classes[1]);
  if (n0 < 2 || n1 < 2) {
    throw std::invalid_argument("pair_silhouette: each class needs at least two points");
  }

  const std::size_t n = reps.size();
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double same = 0;
    double other = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = (reps[i] - reps[j]).norm();
      (labels[j] == labels[i] ? same : other) += d;
    }
    const double own_size = double(labels[i] == classes[0] ? n0 : n1);
    const double a = same / (own_size - 1);
    const double b = other / (double(n) - own_size);
    const double denom = std::max(a, b);
    total += denom > 0 ? (b - a) / denom : 0.0;
  }
  return total / double(n);
}

}  // namespace cdec
