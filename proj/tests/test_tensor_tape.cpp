#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lase/tape.hpp"
#include "lase/tensor.hpp"
#include "support/gradcheck.hpp"

using namespace lase;
using lase::testing::grad_check;

namespace {

Tensor2 random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, bool grad = true) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor2 t(r, c, grad);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

std::vector<double> values(const Tape& t, Var v) {
  const auto s = t.value(v);
  return {s.begin(), s.end()};
}

// Scalarises an op output against fixed random weights so every output
// entry contributes to the checked gradient.
double project(Tape& tape, Var out, const Tensor2& weights, bool with_grad) {
  const Var w = tape.constant(weights);
  const Var loss = tape.inner(out, w);
  if (with_grad) tape.backward(loss);
  return tape.scalar(loss);
}

}  // namespace

TEST(Tensor2, ShapeAndGradAllocation) {
  Tensor2 a(2, 3);
  EXPECT_EQ(a.size(), 6u);
  EXPECT_TRUE(a.grad().empty());
  Tensor2 b(2, 3, true);
  EXPECT_EQ(b.grad().size(), 6u);
  EXPECT_THROW(Tensor2(2, 2, std::vector<double>{1.0, 2.0}), ShapeError);
  EXPECT_THROW(dot(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), ShapeError);
}

TEST(Matvec, IdentityAndZero) {
  Tape t;
  Tensor2 eye(2, 2, {1, 0, 0, 1});
  const Var y = t.matvec(t.constant(eye), t.constant(Tensor2::column({3, 4})));
  EXPECT_EQ(values(t, y), (std::vector<double>{3, 4}));

  Tape t2;
  Tensor2 w(2, 2, true);
  Tensor2 x(2, 1, {5, 6}, true);
  const Var out = t2.matvec(t2.param(w), t2.param(x));
  EXPECT_EQ(values(t2, out), (std::vector<double>{0, 0}));
  t2.backward(t2.reduce_sum(out));
  EXPECT_EQ(x.grad()[0], 0.0);
  EXPECT_EQ(x.grad()[1], 0.0);
}

TEST(Matvec, ShapeMismatchThrows) {
  Tape t;
  EXPECT_THROW(t.matvec(t.zeros(2, 3), t.zeros(2)), ShapeError);
  EXPECT_THROW(t.matvec(t.zeros(2, 2), t.zeros(2, 2)), ShapeError);
}

TEST(Matvec, Linearity) {
  std::mt19937_64 rng(11);
  const auto w = random_tensor(4, 3, rng, false);
  const auto x = random_tensor(3, 1, rng, false);
  const auto y = random_tensor(3, 1, rng, false);
  const double a = 0.7, b = -1.3;
  Tape t;
  const Var W = t.constant(w);
  const Var lhs = t.matvec(W, t.add(t.scale(t.constant(x), a), t.scale(t.constant(y), b)));
  const Var rhs = t.add(t.scale(t.matvec(W, t.constant(x)), a), t.scale(t.matvec(W, t.constant(y)), b));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(t.value(lhs)[i], t.value(rhs)[i], 1e-12);
}

TEST(Matvec, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(1);
  auto w = random_tensor(4, 3, rng);
  auto x = random_tensor(3, 1, rng);
  const auto proj = random_tensor(4, 1, rng, false);
  const auto r = grad_check({{"W", &w}, {"x", &x}}, [&](bool g) {
    Tape t;
    return project(t, t.matvec(t.param(w), t.param(x)), proj, g);
  });
  EXPECT_EQ(r.failed, 0u) << r.worst;
  EXPECT_LT(r.max_rel, 1e-4);
}

TEST(Hadamard, ValuesAndIdentity) {
  Tape t;
  const Var c = t.hadamard(t.constant(Tensor2::column({1, 2})), t.constant(Tensor2::column({3, 4})));
  EXPECT_EQ(values(t, c), (std::vector<double>{3, 8}));
  const Var a = t.constant(Tensor2::column({0.25, -7}));
  EXPECT_EQ(values(t, t.hadamard(a, t.constant(Tensor2::column({1, 1})))), values(t, a));
  EXPECT_THROW(t.hadamard(a, t.zeros(3)), ShapeError);
}

TEST(Hadamard, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  auto a = random_tensor(5, 1, rng);
  auto b = random_tensor(5, 1, rng);
  const auto proj = random_tensor(5, 1, rng, false);
  const auto r = grad_check({{"a", &a}, {"b", &b}}, [&](bool g) {
    Tape t;
    return project(t, t.hadamard(t.param(a), t.param(b)), proj, g);
  });
  EXPECT_EQ(r.failed, 0u) << r.worst;
}

TEST(Concat, ValuesAndErrors) {
  Tape t;
  const Var c = t.concat({t.constant(Tensor2::column({1})), t.constant(Tensor2::column({2, 3}))});
  EXPECT_EQ(values(t, c), (std::vector<double>{1, 2, 3}));
  const Var single = t.constant(Tensor2::column({4, 5}));
  EXPECT_EQ(values(t, t.concat({single})), values(t, single));
  EXPECT_THROW(t.concat(std::span<const Var>{}), ShapeError);
}

TEST(Concat, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  auto a = random_tensor(2, 1, rng);
  auto b = random_tensor(3, 1, rng);
  const auto proj = random_tensor(5, 1, rng, false);
  const auto r = grad_check({{"a", &a}, {"b", &b}}, [&](bool g) {
    Tape t;
    return project(t, t.concat({t.param(a), t.param(b)}), proj, g);
  });
  EXPECT_EQ(r.failed, 0u) << r.worst;
}

TEST(Inner, OrthogonalAndNorm) {
  Tape t;
  EXPECT_EQ(t.scalar(t.inner(t.constant(Tensor2::column({1, 0})), t.constant(Tensor2::column({0, 1})))), 0.0);
  const Var x = t.constant(Tensor2::column({3, 4}));
  EXPECT_EQ(t.scalar(t.inner(x, x)), 25.0);
}

TEST(Reductions, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(4);
  auto a = random_tensor(4, 1, rng);
  auto b = random_tensor(4, 1, rng);
  auto s = random_tensor(1, 1, rng);
  const auto proj = random_tensor(4, 1, rng, false);
  const auto r = grad_check({{"a", &a}, {"b", &b}, {"s", &s}}, [&](bool g) {
    Tape t;
    const Var A = t.param(a), B = t.param(b), S = t.param(s);
    const Var mix = t.add_n(std::vector<Var>{t.scale(A, 0.3), t.sub(A, B), t.scale_by(S, B)});
    const Var loss = t.add(t.add(t.inner(mix, t.constant(proj)), t.reduce_sum(t.hadamard(A, A))), t.inner(A, B));
    if (g) t.backward(loss);
    return t.scalar(loss);
  });
  EXPECT_EQ(r.failed, 0u) << r.worst;
}

TEST(Activations, Values) {
  Tape t;
  EXPECT_EQ(t.scalar(t.sigmoid(t.zeros(1))), 0.5);
  const Var r = t.relu(t.constant(Tensor2::column({-1, 0, 2})));
  EXPECT_EQ(values(t, r), (std::vector<double>{0, 0, 2}));
  // Large magnitudes stay finite.
  const Var s = t.sigmoid(t.constant(Tensor2::column({-800, 800})));
  EXPECT_EQ(t.value(s)[0], 0.0);
  EXPECT_EQ(t.value(s)[1], 1.0);
}

TEST(Activations, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  auto a = random_tensor(6, 1, rng);
  const auto proj = random_tensor(6, 1, rng, false);
  const auto r = grad_check({{"a", &a}}, [&](bool g) {
    Tape t;
    const Var A = t.param(a);
    return project(t, t.add(t.sigmoid(A), t.relu(A)), proj, g);
  });
  EXPECT_EQ(r.failed, 0u) << r.worst;
}

TEST(SoftmaxCrossEntropy, UniformLogits) {
  Tape t;
  EXPECT_NEAR(t.scalar(t.softmax_cross_entropy(t.zeros(3), 1)), std::log(3.0), 1e-15);
  EXPECT_THROW(t.softmax_cross_entropy(t.zeros(3), 3), ShapeError);
}

TEST(SoftmaxCrossEntropy, StableForLargeLogits) {
  Tape t;
  const Var loss = t.softmax_cross_entropy(t.constant(Tensor2::column({1000, 0})), 0);
  EXPECT_NEAR(t.scalar(loss), 0.0, 1e-12);
}

TEST(SoftmaxCrossEntropy, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  auto z = random_tensor(4, 1, rng);
  const auto r = grad_check({{"z", &z}}, [&](bool g) {
    Tape t;
    const Var loss = t.softmax_cross_entropy(t.param(z), 2);
    if (g) t.backward(loss);
    return t.scalar(loss);
  });
  EXPECT_EQ(r.failed, 0u) << r.worst;
}

TEST(Backward, SimpleClosedForms) {
  Tensor2 w(3, 1, {1, -2, 0.5}, true);
  const auto x = Tensor2::column({4, 5, 6});
  {
    Tape t;
    t.backward(t.inner(t.param(w), t.constant(x)));
    EXPECT_EQ(std::vector<double>(w.grad().begin(), w.grad().end()), (std::vector<double>{4, 5, 6}));
  }
  w.zero_grad();
  {
    Tape t;
    const Var W = t.param(w);
    t.backward(t.scale(t.inner(W, W), 0.5));
    EXPECT_EQ(std::vector<double>(w.grad().begin(), w.grad().end()), (std::vector<double>{1, -2, 0.5}));
  }
}

TEST(Backward, GradientsAccumulateAcrossUses) {
  Tensor2 w(1, 1, {3.0}, true);
  Tape t;
  const Var a = t.param(w);
  const Var b = t.param(w);
  t.backward(t.add(a, b));
  EXPECT_EQ(w.grad()[0], 2.0);
}

TEST(Backward, Errors) {
  Tape t;
  const Var v = t.zeros(2);
  EXPECT_THROW(t.backward(v), TapeError);
  const Var s = t.reduce_sum(v);
  t.backward(s);
  EXPECT_THROW(t.backward(s), TapeError);
  EXPECT_THROW(t.zeros(1), TapeError);
  Tape other;
  EXPECT_THROW(other.backward(Var{}), TapeError);
}

TEST(Forward, NonFiniteValuesAreErrors) {
  Tape t;
  const Var big = t.constant(Tensor2::column({1e308}));
  EXPECT_THROW(t.scale(big, 10.0), NumericError);
  EXPECT_THROW(t.constant(Tensor2::column({std::nan("")})), NumericError);
}

TEST(Forward, Deterministic) {
  std::mt19937_64 rng(9);
  const auto w = random_tensor(5, 5, rng, false);
  const auto x = random_tensor(5, 1, rng, false);
  auto run = [&] {
    Tape t;
    const Var y = t.sigmoid(t.matvec(t.constant(w), t.constant(x)));
    return values(t, y);
  };
  EXPECT_EQ(run(), run());
}
