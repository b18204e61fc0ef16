#include "cdec/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace cdec {

namespace {

constexpr double kNewColumnStddev = 0.02;

Vector activate(Activation act, const Vector& z) {
  switch (act) {
    case Activation::Tanh:
      return z.array().tanh().matrix();
    case Activation::Identity:
      return z;
  }
  return z;
}

}  // namespace

Encoder Encoder::init(Index input_dim, Index hidden_dim, Index output_dim, Seed seed,
                      Activation activation) {
  if (input_dim <= 0 || hidden_dim <= 0 || output_dim <= 0) {
    throw std::invalid_argument("Encoder::init: dimensions must be positive");
  }
  Rng rng(seed);
  Encoder enc;
  enc.w1 = gaussian_matrix(input_dim, hidden_dim, 1.0 / std::sqrt(double(input_dim)), rng);
  enc.b1 = Vector::Zero(hidden_dim);
  enc.w2 = gaussian_matrix(hidden_dim, output_dim, 1.0 / std::sqrt(double(hidden_dim)), rng);
  enc.b2 = Vector::Zero(output_dim);
  enc.activation = activation;
  return enc;
}

Encoder Encoder::zeros(Index input_dim, Index hidden_dim, Index output_dim, Activation activation) {
  Encoder enc;
  enc.w1 = Matrix::Zero(input_dim, hidden_dim);
  enc.b1 = Vector::Zero(hidden_dim);
  enc.w2 = Matrix::Zero(hidden_dim, output_dim);
  enc.b2 = Vector::Zero(output_dim);
  enc.activation = activation;
  return enc;
}

EncoderGradients EncoderGradients::zeros_like(const Encoder& enc) {
  return {Matrix::Zero(enc.w1.rows(), enc.w1.cols()), Vector::Zero(enc.b1.size()),
          Matrix::Zero(enc.w2.rows(), enc.w2.cols()), Vector::Zero(enc.b2.size())};
}

EncoderGradients& EncoderGradients::operator+=(const EncoderGradients& other) {
  w1 += other.w1;
  b1 += other.b1;
  w2 += other.w2;
  b2 += other.b2;
  return *this;
}

EncoderOptimizer EncoderOptimizer::for_encoder(const Encoder& enc) {
  return {AdamState<double>::zeros(enc.w1.rows(), enc.w1.cols()),
          AdamState<double>::zeros(enc.b1.size(), 1),
          AdamState<double>::zeros(enc.w2.rows(), enc.w2.cols()),
          AdamState<double>::zeros(enc.b2.size(), 1)};
}

EncoderTrace encode_traced(const Encoder& enc, const Vector& features) {
  if (features.size() != enc.input_dim()) {
    throw DimensionError("encode: feature dim " + std::to_string(features.size()) +
                         " != encoder input dim " + std::to_string(enc.input_dim()));
  }
  EncoderTrace trace;
  trace.input = features;
  trace.hidden = activate(enc.activation, matvec(enc.w1, features) + enc.b1);
  trace.output = matvec(enc.w2, trace.hidden) + enc.b2;
  return trace;
}

Vector encode(const Encoder& enc, const Vector& features) {
  return encode_traced(enc, features).output;
}

void encoder_backward(const Encoder& enc, const EncoderTrace& trace, const Vector& grad_output,
                      EncoderGradients& out) {
  if (grad_output.size() != enc.output_dim()) {
    throw DimensionError("encoder_backward: gradient dim " + std::to_string(grad_output.size()) +
                         " != encoder output dim " + std::to_string(enc.output_dim()));
  }
  out.w2.noalias() += trace.hidden * grad_output.transpose();
  out.b2 += grad_output;
  Vector grad_hidden = enc.w2 * grad_output;
  if (enc.activation == Activation::Tanh) {
    grad_hidden.array() *= 1.0 - trace.hidden.array().square();
  }
  out.w1.noalias() += trace.input * grad_hidden.transpose();
  out.b1 += grad_hidden;
}

void apply_encoder_gradients(Encoder& enc, const EncoderGradients& grads, EncoderOptimizer& opt,
                             double lr) {
  adam_step(enc.w1, grads.w1, opt.w1, lr);
  adam_step(enc.b1, grads.b1, opt.b1, lr);
  adam_step(enc.w2, grads.w2, opt.w2, lr);
  adam_step(enc.b2, grads.b2, opt.b2, lr);
}

ClassifierHead::ClassifierHead(Index representation_dim)
    : weights_(Matrix::Zero(representation_dim, 0)) {}

ClassifierHead::ClassifierHead(Matrix weights, Index boundary, std::vector<RelationId> relation_ids)
    : weights_(std::move(weights)), boundary_(boundary), relation_ids_(std::move(relation_ids)) {
  if (boundary_ < 0 || boundary_ > weights_.cols()) {
    throw std::invalid_argument("ClassifierHead: boundary " + std::to_string(boundary_) +
                                " outside [0, " + std::to_string(weights_.cols()) + "]");
  }
  if (static_cast<Index>(relation_ids_.size()) != weights_.cols()) {
    throw std::invalid_argument("ClassifierHead: " + std::to_string(relation_ids_.size()) +
                                " relation ids for " + std::to_string(weights_.cols()) + " columns");
  }
  std::unordered_set<RelationId> seen;
  for (RelationId r : relation_ids_) {
    if (!seen.insert(r).second) {
      throw std::invalid_argument("ClassifierHead: duplicate relation id " + std::to_string(r));
    }
  }
}

std::optional<Index> ClassifierHead::column_of(RelationId relation) const {
  auto it = std::find(relation_ids_.begin(), relation_ids_.end(), relation);
  if (it == relation_ids_.end()) {
    return std::nullopt;
  }
  return static_cast<Index>(it - relation_ids_.begin());
}

ClassifierHead grow(const ClassifierHead& head, std::span<const RelationId> new_relations,
                    Seed init_seed) {
  std::unordered_set<RelationId> known(head.relation_ids().begin(), head.relation_ids().end());
  for (RelationId r : new_relations) {
    if (!known.insert(r).second) {
      throw std::invalid_argument("grow: relation " + std::to_string(r) + " already in head");
    }
  }

  const Index d = head.representation_dim();
  const Index old_cols = head.num_columns();
  const Index added = static_cast<Index>(new_relations.size());

  Matrix weights(d, old_cols + added);
  weights.leftCols(old_cols) = head.weights();
  Rng rng(init_seed);
  weights.rightCols(added) = gaussian_matrix(d, added, kNewColumnStddev, rng);

  std::vector<RelationId> ids = head.relation_ids();
  ids.insert(ids.end(), new_relations.begin(), new_relations.end());
  return ClassifierHead(std::move(weights), old_cols, std::move(ids));
}

HeadSnapshot snapshot_prev(const ClassifierHead& head) {
  const auto& ids = head.relation_ids();
  return HeadSnapshot(Matrix(head.prev_columns()),
                      std::vector<RelationId>(ids.begin(), ids.begin() + head.boundary()));
}

void restore_prev(ClassifierHead& head, const HeadSnapshot& snap) {
  if (snap.size() != head.boundary()) {
    throw std::invalid_argument("restore_prev: snapshot has " + std::to_string(snap.size()) +
                                " columns, head boundary is " + std::to_string(head.boundary()));
  }
  if (snap.columns().rows() != head.representation_dim()) {
    throw DimensionError("restore_prev: snapshot rows " + std::to_string(snap.columns().rows()) +
                         " != head rows " + std::to_string(head.representation_dim()));
  }
  if (!std::equal(snap.relation_ids().begin(), snap.relation_ids().end(),
                  head.relation_ids().begin())) {
    throw std::invalid_argument("restore_prev: snapshot relation ids do not match head prefix");
  }
  head.weights().leftCols(head.boundary()) = snap.columns();
}

HeadOptimizer HeadOptimizer::for_head(const ClassifierHead& head) {
  const Index d = head.representation_dim();
  return {AdamState<double>::zeros(d, head.boundary()),
          AdamState<double>::zeros(d, head.num_columns() - head.boundary())};
}

void apply_head_gradients(ClassifierHead& head, const Matrix& grads, HeadOptimizer& opt,
                          double lr_prev, double lr_cur) {
  auto& w = head.weights();
  if (grads.rows() != w.rows() || grads.cols() != w.cols()) {
    throw DimensionError("apply_head_gradients: grads " + detail::shape_str(grads.rows(), grads.cols()) +
                         " vs weights " + detail::shape_str(w.rows(), w.cols()));
  }
  const Index b = head.boundary();
  const Index c = w.cols() - b;
  adam_step(w.leftCols(b), grads.leftCols(b), opt.prev, lr_prev);
  adam_step(w.rightCols(c), grads.rightCols(c), opt.cur, lr_cur);
}

Vector head_logits(const ClassifierHead& head, const Vector& representation) {
  return matvec(head.weights(), representation);
}

Vector forward(const Encoder& enc, const ClassifierHead& head, const Vector& features) {
  if (head.num_columns() == 0) {
    throw std::invalid_argument("forward: head has no columns");
  }
  return softmax(head_logits(head, encode(enc, features)));
}

bool bit_identical(const Encoder& a, const Encoder& b) {
  return a.activation == b.activation && bit_identical(a.w1, b.w1) && bit_identical(a.b1, b.b1) &&
         bit_identical(a.w2, b.w2) && bit_identical(a.b2, b.b2);
}

bool bit_identical(const EncoderOptimizer& a, const EncoderOptimizer& b) {
  return bit_identical(a.w1, b.w1) && bit_identical(a.b1, b.b1) && bit_identical(a.w2, b.w2) &&
         bit_identical(a.b2, b.b2);
}

bool bit_identical(const ClassifierHead& a, const ClassifierHead& b) {
  return a.boundary() == b.boundary() && a.relation_ids() == b.relation_ids() &&
         bit_identical(a.weights(), b.weights());
}

bool bit_identical(const HeadOptimizer& a, const HeadOptimizer& b) {
  return bit_identical(a.prev, b.prev) && bit_identical(a.cur, b.cur);
}

bool bit_identical(const Model& a, const Model& b) {
  return bit_identical(a.encoder, b.encoder) && bit_identical(a.head, b.head) &&
         bit_identical(a.encoder_opt, b.encoder_opt) && bit_identical(a.head_opt, b.head_opt);
}

}  // namespace cdec
