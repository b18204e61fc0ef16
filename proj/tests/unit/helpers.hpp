#pragma once

#include "cdec/datastream.hpp"
#include "cdec/model.hpp"
#include "cdec/random.hpp"

#include <vector>

namespace cdec::test {

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline Instance make_instance(std::size_t id, Vector features, RelationId label) {
  return Instance{id, std::move(features), label};
}

/// Encoder that passes its input straight through: identity layers, no tanh.
inline Encoder passthrough(Index dim) {
  Encoder enc = Encoder::zeros(dim, dim, dim, Activation::Identity);
  enc.w1.setIdentity();
  enc.w2.setIdentity();
  return enc;
}

/// Random model with a head split at `boundary`.
inline Model random_model(Index f, Index hidden, Index d, Index columns, Index boundary, Seed seed) {
  Rng rng(derive_seed(seed, "test-model"));
  Model m;
  m.encoder = Encoder::init(f, hidden, d, derive_seed(seed, "test-encoder"));
  std::vector<RelationId> ids;
  for (Index j = 0; j < columns; ++j) ids.push_back(RelationId(j));
  m.head = ClassifierHead(gaussian_matrix(d, columns, 0.5, rng), boundary, ids);
  m.head_opt = HeadOptimizer::for_head(m.head);
  m.encoder_opt = EncoderOptimizer::for_encoder(m.encoder);
  return m;
}

}  // namespace cdec::test
