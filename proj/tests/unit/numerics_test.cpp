#include "cdec/numerics.hpp"
#include "cdec/random.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace cdec;
using test::vec;

TEST_SUITE("numerics") {

TEST_CASE("matvec multiplies by the transpose") {
  Matrix eye = Matrix::Identity(2, 2);
  CHECK(matvec(eye, vec({3, 4})).isApprox(vec({3, 4})));

  Matrix ones = Matrix::Ones(5, 1);
  const Vector h = vec({1, -2, 3.5, 0, 7});
  REQUIRE(matvec(ones, h).size() == 1);
  CHECK(matvec(ones, h)(0) == doctest::Approx(h.sum()));

  Matrix w(2, 2);
  w << 1, 2, 3, 4;
  CHECK(matvec(w, vec({1, 1})).isApprox(vec({4, 6})));
}

TEST_CASE("matvec names both dimensions on mismatch") {
  Matrix w = Matrix::Zero(3, 2);
  try {
    (void)matvec(w, vec({1, 2}));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('3') != std::string::npos);
    CHECK(msg.find('2') != std::string::npos);
  }
}

TEST_CASE("softmax examples") {
  const Vector u = softmax(vec({0, 0, 0}));
  for (Index i = 0; i < 3; ++i) CHECK(u(i) == doctest::Approx(1.0 / 3));

  for (double c : {-50.0, 0.0, 3.0, 700.0}) {
    const Vector p = softmax(vec({c, c + std::log(2.0)}));
    CHECK(p(0) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(p(1) == doctest::Approx(2.0 / 3).epsilon(1e-12));
  }

  const Vector big = softmax(vec({1000, 0}));
  CHECK(big.allFinite());
  CHECK(big(0) == doctest::Approx(1.0));
  CHECK(big(1) == doctest::Approx(0.0));

  CHECK_THROWS(softmax(Vector()));
}

TEST_CASE("softmax sums to one and ignores uniform shifts") {
  Rng rng(5);
  std::normal_distribution<double> shift(0.0, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector logits = gaussian_matrix(7, 1, 20.0, rng).col(0);
    const Vector p = softmax(logits);
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    const Vector q = softmax((logits.array() + shift(rng)).matrix());
    CHECK((p - q).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("xent_loss examples") {
  CHECK(xent_loss(vec({1, 0}), 0) == doctest::Approx(0.0));
  CHECK(xent_loss(vec({0.25, 0.25, 0.25, 0.25}), 2) == doctest::Approx(std::log(4.0)));
  CHECK(xent_loss(vec({0.25, 0.75}), 1) == doctest::Approx(0.28768).epsilon(1e-4));
  CHECK(std::isfinite(xent_loss(vec({1, 0}), 1)));
  CHECK(xent_loss(vec({1, 0}), 1) == doctest::Approx(-std::log(kMinProbability)));
  CHECK_THROWS_AS(xent_loss(vec({0.5, 0.5}), 2), std::out_of_range);
  CHECK_THROWS_AS(xent_loss(vec({0.5, 0.5}), -1), std::out_of_range);
}

TEST_CASE("softmax_xent_grad examples") {
  CHECK(softmax_xent_grad(vec({0, 0}), 0).isApprox(vec({-0.5, 0.5})));

  const double s = std::exp(1.0) / (std::exp(1.0) + std::exp(2.0));
  // p - onehot(1) = [s, (1 - s) - 1] = [s, -s]; the finite-difference check
  // below is the arbiter.
  const Vector g = softmax_xent_grad(vec({1, 2}), 1);
  CHECK(g(0) == doctest::Approx(s));
  CHECK(g(1) == doctest::Approx(-s));

  const Matrix at = vec({1, 2});
  auto loss = [](const Matrix& z) { return xent_loss(softmax(Vector(z.col(0))), 1); };
  CHECK(finite_diff_check(loss, at, Matrix(g), 1e-6) < 1e-4);
}

TEST_CASE("softmax_xent_grad sums to zero") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector logits = gaussian_matrix(6, 1, 5.0, rng).col(0);
    CHECK(std::abs(softmax_xent_grad(logits, trial % 6).sum()) < 1e-10);
  }
}

TEST_CASE("softmax_xent_grad agrees with finite differences") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Index c = 2 + trial % 6;
    const Index label = trial % c;
    const Matrix at = gaussian_matrix(c, 1, 2.0, rng);
    auto loss = [label](const Matrix& z) { return xent_loss(softmax(Vector(z.col(0))), label); };
    CHECK(finite_diff_check(loss, at, Matrix(softmax_xent_grad(at.col(0), label)), 1e-6) < 1e-4);
  }
}

TEST_CASE("adam_step with zero lr leaves parameters bit-identical") {
  Rng rng(3);
  Matrix p = gaussian_matrix(4, 3, 1.0, rng);
  const Matrix before = p;
  AdamState<double> st = AdamState<double>::zeros(4, 3);
  for (int i = 0; i < 5; ++i) adam_step(p, gaussian_matrix(4, 3, 1.0, rng), st, 0.0);
  CHECK(bit_identical(p, before));
  CHECK(st.t == 5);
}

TEST_CASE("adam_step first step moves by about lr against the gradient sign") {
  for (double g : {3.0, -0.01, 250.0}) {
    Matrix p = Matrix::Constant(1, 1, 1.0);
    Matrix grad = Matrix::Constant(1, 1, g);
    AdamState<double> st = AdamState<double>::zeros(1, 1);
    adam_step(p, grad, st, 1e-3);
    const double expected = -1e-3 * g / (std::abs(g) + 1e-8);
    CHECK(p(0, 0) - 1.0 == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("adam_step with zero gradients is a no-op that still counts") {
  Matrix p = Matrix::Constant(2, 2, 0.5);
  const Matrix before = p;
  AdamState<double> st = AdamState<double>::zeros(2, 2);
  adam_step(p, Matrix::Zero(2, 2), st, 1e-3);
  adam_step(p, Matrix::Zero(2, 2), st, 1e-3);
  CHECK(bit_identical(p, before));
  CHECK(st.t == 2);
}

TEST_CASE("adam_step rejects shape mismatches") {
  Matrix p = Matrix::Zero(2, 2);
  AdamState<double> st = AdamState<double>::zeros(2, 2);
  CHECK_THROWS_AS(adam_step(p, Matrix::Zero(2, 3), st, 1e-3), DimensionError);
  AdamState<double> wrong = AdamState<double>::zeros(3, 2);
  CHECK_THROWS_AS(adam_step(p, Matrix::Zero(2, 2), wrong, 1e-3), DimensionError);
}

TEST_CASE("adam_step updates a block in place") {
  Matrix p = Matrix::Ones(3, 4);
  AdamState<double> st = AdamState<double>::zeros(3, 2);
  adam_step(p.rightCols(2), Matrix::Ones(3, 2), st, 0.1);
  CHECK(p.leftCols(2).isApprox(Matrix::Ones(3, 2)));
  CHECK((p.rightCols(2).array() < 1.0).all());
}

TEST_CASE("finite_diff_check examples") {
  Rng rng(1);
  const Matrix at = gaussian_matrix(3, 4, 1.0, rng);
  auto linear = [](const Matrix& x) { return x.sum(); };
  CHECK(finite_diff_check(linear, at, Matrix::Ones(3, 4), 1e-6) < 1e-9);
  auto quad = [](const Matrix& x) { return 0.5 * x.squaredNorm(); };
  CHECK(finite_diff_check(quad, at, at, 1e-6) < 1e-6);

  auto blows_up = [](const Matrix& x) { return x(0, 0) > 0 ? std::log(-1.0) : 0.0; };
  CHECK_THROWS_AS(finite_diff_check(blows_up, Matrix::Zero(1, 1), Matrix::Zero(1, 1), 1e-6),
                  std::domain_error);
  CHECK_THROWS(finite_diff_check(linear, at, Matrix::Ones(3, 4), 0.0));
  CHECK_THROWS_AS(finite_diff_check(linear, at, Matrix::Ones(4, 3), 1e-6), DimensionError);
}

TEST_CASE("finite_diff_check catches a wrong gradient") {
  Rng rng(2);
  const Matrix at = gaussian_matrix(2, 2, 1.0, rng);
  auto quad = [](const Matrix& x) { return 0.5 * x.squaredNorm(); };
  CHECK(finite_diff_check(quad, at, Matrix(2.0 * at), 1e-6) > 0.4);
}

}  // TEST_SUITE
