#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace cdec {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

using Index = Eigen::Index;

/// Thrown when operand shapes do not line up.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::string shape_str(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace detail

/// Logits of a d x C weight matrix against a d-dim representation: W^T h.
template <typename WDerived, typename HDerived>
VectorX<typename WDerived::Scalar> matvec(const Eigen::MatrixBase<WDerived>& weights,
                                          const Eigen::MatrixBase<HDerived>& h) {
  if (weights.rows() != h.size()) {
    throw DimensionError("matvec: weight rows " + std::to_string(weights.rows()) +
                         " != representation dim " + std::to_string(h.size()));
  }
  return weights.transpose() * h;
}

/// Numerically stable softmax (max-subtracted).
template <typename Derived>
VectorX<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  if (logits.size() == 0) {
    throw std::invalid_argument("softmax: empty logits");
  }
  const Scalar top = logits.maxCoeff();
  VectorX<Scalar> out = (logits.array() - top).exp().matrix();
  out /= out.sum();
  return out;
}

/// Smallest probability the cross-entropy will take the log of.
inline constexpr double kMinProbability = 1e-12;

template <typename Derived>
typename Derived::Scalar xent_loss(const Eigen::MatrixBase<Derived>& probs, Index label) {
  using Scalar = typename Derived::Scalar;
  if (label < 0 || label >= probs.size()) {
    throw std::out_of_range("xent_loss: label " + std::to_string(label) +
                            " outside [0, " + std::to_string(probs.size()) + ")");
  }
  const Scalar p = std::max<Scalar>(probs(label), Scalar(kMinProbability));
  return -std::log(p);
}

/// Gradient of -log softmax(logits)[label] with respect to the logits.
template <typename Derived>
VectorX<typename Derived::Scalar> softmax_xent_grad(const Eigen::MatrixBase<Derived>& logits,
                                                    Index label) {
  if (label < 0 || label >= logits.size()) {
    throw std::out_of_range("softmax_xent_grad: label " + std::to_string(label) +
                            " outside [0, " + std::to_string(logits.size()) + ")");
  }
  VectorX<typename Derived::Scalar> grad = softmax(logits);
  grad(label) -= 1;
  return grad;
}

/// First and second moment accumulators for one parameter tensor.
template <typename Scalar = double>
struct AdamState {
  MatrixX<Scalar> m;
  MatrixX<Scalar> v;
  std::int64_t t = 0;
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);

  static AdamState zeros(Index rows, Index cols) {
    AdamState s;
    s.m = MatrixX<Scalar>::Zero(rows, cols);
    s.v = MatrixX<Scalar>::Zero(rows, cols);
    return s;
  }
};

/// Same shape and same bytes. Distinguishes -0.0 from 0.0.
template <typename ADerived, typename BDerived>
bool bit_identical(const Eigen::MatrixBase<ADerived>& a, const Eigen::MatrixBase<BDerived>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    return false;
  }
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      const auto x = a(i, j);
      const auto y = b(i, j);
      if (std::memcmp(&x, &y, sizeof(x)) != 0) {
        return false;
      }
    }
  }
  return true;
}

template <typename Scalar>
bool bit_identical(const AdamState<Scalar>& a, const AdamState<Scalar>& b) {
  return a.t == b.t && a.beta1 == b.beta1 && a.beta2 == b.beta2 && a.epsilon == b.epsilon &&
         bit_identical(a.m, b.m) && bit_identical(a.v, b.v);
}

/// One bias-corrected Adam update, in place. `params` may be a block expression.
///
/// A learning rate of exactly zero leaves the parameters bit-identical (the
/// moments still advance).
template <typename PDerived, typename GDerived, typename Scalar>
void adam_step(const Eigen::MatrixBase<PDerived>& params_, const Eigen::MatrixBase<GDerived>& grads,
               AdamState<Scalar>& state, Scalar lr) {
  auto& params = const_cast<Eigen::MatrixBase<PDerived>&>(params_);
  if (params.rows() != grads.rows() || params.cols() != grads.cols()) {
    throw DimensionError("adam_step: params " + detail::shape_str(params.rows(), params.cols()) +
                         " vs grads " + detail::shape_str(grads.rows(), grads.cols()));
  }
  if (state.m.rows() != params.rows() || state.m.cols() != params.cols() ||
      state.v.rows() != params.rows() || state.v.cols() != params.cols()) {
    throw DimensionError("adam_step: params " + detail::shape_str(params.rows(), params.cols()) +
                         " vs optimizer state " + detail::shape_str(state.m.rows(), state.m.cols()));
  }
  if (!(lr >= 0)) {
    throw std::invalid_argument("adam_step: negative learning rate");
  }

  state.t += 1;
  state.m = state.beta1 * state.m + (1 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1 - state.beta2) * grads.cwiseAbs2();
  if (lr == 0) {
    return;
  }
  const Scalar m_corr = 1 - std::pow(state.beta1, static_cast<Scalar>(state.t));
  const Scalar v_corr = 1 - std::pow(state.beta2, static_cast<Scalar>(state.t));
  params.array() -= lr * (state.m.array() / m_corr) /
                    ((state.v.array() / v_corr).sqrt() + state.epsilon);
}

/// Largest relative disagreement between an analytic gradient and central
/// differences of `loss` around `at`. Relative error is
/// |numeric - analytic| / (|analytic| + 1e-8).
template <typename Scalar>
Scalar finite_diff_check(const std::function<Scalar(const MatrixX<Scalar>&)>& loss,
                         const MatrixX<Scalar>& at, const MatrixX<Scalar>& analytic, Scalar eps) {
  if (!(eps > 0)) {
    throw std::invalid_argument("finite_diff_check: eps must be positive");
  }
  if (at.rows() != analytic.rows() || at.cols() != analytic.cols()) {
    throw DimensionError("finite_diff_check: point " + detail::shape_str(at.rows(), at.cols()) +
                         " vs gradient " + detail::shape_str(analytic.rows(), analytic.cols()));
  }
  MatrixX<Scalar> probe = at;
  Scalar worst = 0;
  for (Index j = 0; j < at.cols(); ++j) {
    for (Index i = 0; i < at.rows(); ++i) {
      const Scalar saved = probe(i, j);
      probe(i, j) = saved + eps;
      const Scalar up = loss(probe);
      probe(i, j) = saved - eps;
      const Scalar down = loss(probe);
      probe(i, j) = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw std::domain_error("finite_diff_check: non-finite loss while probing entry (" +
                                std::to_string(i) + ", " + std::to_string(j) + ")");
      }
      const Scalar numeric = (up - down) / (2 * eps);
      const Scalar rel = std::abs(numeric - analytic(i, j)) / (std::abs(analytic(i, j)) + Scalar(1e-8));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

inline double finite_diff_check(const std::function<double(const Matrix&)>& loss, const Matrix& at,
                                const Matrix& analytic, double eps) {
  return finite_diff_check<double>(loss, at, analytic, eps);
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& x) {
  return x.allFinite();
}

}  // namespace cdec
