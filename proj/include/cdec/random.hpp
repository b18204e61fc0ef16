#pragma once

#include "cdec/numerics.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace cdec {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

/// splitmix64 finalizer; mixes a base seed with a stream tag and an index so
/// that every consumer of randomness gets an independent, reproducible stream.
inline Seed derive_seed(Seed base, std::string_view tag, std::uint64_t index = 0) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : tag) {
    h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
  }
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (h + 1) + 0xbf58476d1ce4e5b9ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

template <typename Scalar = double>
MatrixX<Scalar> gaussian_matrix(Index rows, Index cols, Scalar stddev, Rng& rng) {
  std::normal_distribution<Scalar> dist(Scalar(0), stddev);
  MatrixX<Scalar> out(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      out(i, j) = dist(rng);
    }
  }
  return out;
}

}  // namespace cdec
