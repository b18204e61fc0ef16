#pragma once

#include "cdec/numerics.hpp"
#include "cdec/random.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cdec {

using RelationId = std::uint32_t;

enum class Activation : std::uint8_t { Tanh = 0, Identity = 1 };

/// Two affine layers with an activation between them: f -> hidden -> d.
///
///   h = W2^T act(W1^T x + b1) + b2
struct Encoder {
  Matrix w1;  // f x hidden
  Vector b1;
  Matrix w2;  // hidden x d
  Vector b2;
  Activation activation = Activation::Tanh;

  /// Weights drawn N(0, 1/fan_in), biases zero.
  static Encoder init(Index input_dim, Index hidden_dim, Index output_dim, Seed seed,
                      Activation activation = Activation::Tanh);
  static Encoder zeros(Index input_dim, Index hidden_dim, Index output_dim,
                       Activation activation = Activation::Tanh);

  Index input_dim() const { return w1.rows(); }
  Index hidden_dim() const { return w1.cols(); }
  Index output_dim() const { return w2.cols(); }
};

/// Intermediate values of one encoder pass, kept for backprop.
struct EncoderTrace {
  Vector input;
  Vector hidden;  // post-activation
  Vector output;
};

struct EncoderGradients {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;

  static EncoderGradients zeros_like(const Encoder& enc);
  EncoderGradients& operator+=(const EncoderGradients& other);
};

struct EncoderOptimizer {
  AdamState<double> w1, b1, w2, b2;

  static EncoderOptimizer for_encoder(const Encoder& enc);
};

Vector encode(const Encoder& enc, const Vector& features);
EncoderTrace encode_traced(const Encoder& enc, const Vector& features);

/// Accumulates dL/dparams into `out` given dL/dh for one traced pass.
void encoder_backward(const Encoder& enc, const EncoderTrace& trace, const Vector& grad_output,
                      EncoderGradients& out);

void apply_encoder_gradients(Encoder& enc, const EncoderGradients& grads, EncoderOptimizer& opt,
                             double lr);

/// Growable d x C output layer. Columns [0, boundary) are the previous group,
/// [boundary, C) the current group.
class ClassifierHead {
 public:
  ClassifierHead() = default;
  explicit ClassifierHead(Index representation_dim);
  ClassifierHead(Matrix weights, Index boundary, std::vector<RelationId> relation_ids);

  const Matrix& weights() const { return weights_; }
  Matrix& weights() { return weights_; }
  Index boundary() const { return boundary_; }
  Index num_columns() const { return weights_.cols(); }
  Index representation_dim() const { return weights_.rows(); }
  const std::vector<RelationId>& relation_ids() const { return relation_ids_; }

  auto prev_columns() const { return weights_.leftCols(boundary_); }
  auto cur_columns() const { return weights_.rightCols(weights_.cols() - boundary_); }

  /// Column for a relation, if the head knows it.
  std::optional<Index> column_of(RelationId relation) const;

 private:
  Matrix weights_;
  Index boundary_ = 0;
  std::vector<RelationId> relation_ids_;
};

/// Frozen copy of the previous-group columns of a head.
class HeadSnapshot {
 public:
  HeadSnapshot() = default;
  HeadSnapshot(Matrix columns, std::vector<RelationId> relation_ids)
      : columns_(std::move(columns)), relation_ids_(std::move(relation_ids)) {}

  const Matrix& columns() const { return columns_; }
  const std::vector<RelationId>& relation_ids() const { return relation_ids_; }
  Index size() const { return columns_.cols(); }
  bool empty() const { return columns_.cols() == 0; }

 private:
  Matrix columns_;
  std::vector<RelationId> relation_ids_;
};

/// Appends one column per new relation, drawn N(0, 0.02^2) from `init_seed`.
/// Every previously known relation moves into the previous group.
ClassifierHead grow(const ClassifierHead& head, std::span<const RelationId> new_relations,
                    Seed init_seed);

HeadSnapshot snapshot_prev(const ClassifierHead& head);

/// Overwrites the previous group with the snapshot; current columns untouched.
void restore_prev(ClassifierHead& head, const HeadSnapshot& snap);

/// Separate Adam state for the previous and current column groups.
struct HeadOptimizer {
  AdamState<double> prev;
  AdamState<double> cur;

  static HeadOptimizer for_head(const ClassifierHead& head);
};

/// Previous group stepped with `lr_prev`, current group with `lr_cur`.
void apply_head_gradients(ClassifierHead& head, const Matrix& grads, HeadOptimizer& opt,
                          double lr_prev, double lr_cur);

/// Logits over every column of the head.
Vector head_logits(const ClassifierHead& head, const Vector& representation);

/// Probabilities over all seen relations.
Vector forward(const Encoder& enc, const ClassifierHead& head, const Vector& features);

/// Encoder plus head plus the optimizer state that trains them.
struct Model {
  Encoder encoder;
  ClassifierHead head;
  EncoderOptimizer encoder_opt;
  HeadOptimizer head_opt;
};

bool bit_identical(const Encoder& a, const Encoder& b);
bool bit_identical(const EncoderOptimizer& a, const EncoderOptimizer& b);
bool bit_identical(const ClassifierHead& a, const ClassifierHead& b);
bool bit_identical(const HeadOptimizer& a, const HeadOptimizer& b);
bool bit_identical(const Model& a, const Model& b);

}  // namespace cdec
