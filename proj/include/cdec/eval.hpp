#pragma once

#include "cdec/datastream.hpp"
#include "cdec/model.hpp"

#include <map>
#include <span>
#include <vector>

namespace cdec {

/// Column with the highest score; ties go to the lowest column index.
Index argmax_lowest(const Vector& scores);

/// Predicted column for one instance.
Index predict_column(const Encoder& enc, const ClassifierHead& head, const Vector& features);

std::vector<Vector> representations(const Encoder& enc, std::span<const Instance> instances);

/// Fraction of instances whose argmax over every head column is their label.
/// Throws if an instance's label has no column.
double accuracy_all_seen(const Encoder& enc, const ClassifierHead& head,
                         std::span<const Instance> instances);

/// Accuracy over the union of the given tasks' test sets.
double accuracy_all_seen(const Encoder& enc, const ClassifierHead& head,
                         std::span<const Task> tasks);

struct RelationCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  double precision() const;
  double recall() const;
  /// 2PR/(P+R), zero when P+R is zero.
  double f1() const;
};

/// One-vs-rest counts for every relation that occurs as a label or a prediction.
struct ConfusionTally {
  std::map<RelationId, RelationCounts> counts;
  std::size_t total = 0;
  std::size_t correct = 0;

  void add(RelationId truth, RelationId predicted);
  const RelationCounts& at(RelationId relation) const;
};

ConfusionTally tally(const Encoder& enc, const ClassifierHead& head,
                     std::span<const Instance> instances);

std::map<RelationId, double> per_relation_f1(const Encoder& enc, const ClassifierHead& head,
                                             std::span<const Instance> instances,
                                             std::span<const RelationId> relations);

/// Mean probability mass the head puts on its previous group. Diagnoses the
/// classifier skew toward new relations.
double prev_prob_mass(const Encoder& enc, const ClassifierHead& head,
                      std::span<const Instance> instances);

/// Mean silhouette (b - a) / max(a, b) of a two-class labeling with Euclidean
/// distances. Each class needs at least two points.
double pair_silhouette(std::span<const Vector> reps, std::span<const int> labels);

}  // namespace cdec
