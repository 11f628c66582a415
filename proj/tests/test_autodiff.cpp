#include "support.hpp"

#include <gtest/gtest.h>

using namespace stag;
using namespace stag::testing;
using ad::Matrix;
using ad::Parameter;
using ad::Tape;
using ad::Var;

namespace {

constexpr double kTol = 1e-4;

struct OpFixture : ::testing::Test {
  std::mt19937_64 rng{1234};
  Parameter a{"a", random_matrix(3, 4, rng)};
  Parameter b{"b", random_matrix(3, 4, rng)};
  Parameter c{"c", random_matrix(4, 2, rng)};
  Parameter row{"row", random_matrix(1, 4, rng)};

  void expect_grad(std::initializer_list<Parameter*> params, const std::function<Var(Tape&)>& f) {
    const GradCheck g = gradient_check(nn::ParameterList(params), [&](Tape& t) { return probe_loss(t, f(t)); });
    EXPECT_LT(g.worst, kTol) << g.worst_name;
    EXPECT_GT(g.checked, 0);
  }
};

}  // namespace

TEST_F(OpFixture, MatmulGradient) {
  expect_grad({&a, &c}, [&](Tape& t) { return ad::matmul(t.parameter(a), t.parameter(c)); });
}

TEST_F(OpFixture, ElementwiseGradients) {
  expect_grad({&a, &b}, [&](Tape& t) { return ad::add(t.parameter(a), t.parameter(b)); });
  expect_grad({&a, &b}, [&](Tape& t) { return ad::sub(t.parameter(a), t.parameter(b)); });
  expect_grad({&a, &b}, [&](Tape& t) { return ad::hadamard(t.parameter(a), t.parameter(b)); });
  expect_grad({&a}, [&](Tape& t) { return ad::scale(t.parameter(a), -2.5); });
  expect_grad({&a, &row}, [&](Tape& t) { return ad::add_row(t.parameter(a), t.parameter(row)); });
  expect_grad({&a}, [&](Tape& t) { return ad::leaky_relu(t.parameter(a)); });
}

TEST_F(OpFixture, ShapeGradients) {
  expect_grad({&a}, [&](Tape& t) { return ad::transpose(t.parameter(a)); });
  expect_grad({&a, &b}, [&](Tape& t) {
    const Var parts[] = {t.parameter(a), t.parameter(b)};
    return ad::concat_cols(parts);
  });
  expect_grad({&a, &b}, [&](Tape& t) {
    const Var parts[] = {t.parameter(a), t.parameter(b), t.parameter(a)};
    return ad::concat_rows(parts);
  });
  expect_grad({&a}, [&](Tape& t) { return ad::slice_rows(t.parameter(a), 1, 2); });
  expect_grad({&a}, [&](Tape& t) { return ad::slice_cols(t.parameter(a), 1, 3); });
  expect_grad({&a}, [&](Tape& t) { return ad::reshape(t.parameter(a), 2, 6); });
  expect_grad({&a}, [&](Tape& t) { return ad::swap_last_axes(t.parameter(a), 3, 2, 2); });
  expect_grad({&a}, [&](Tape& t) { return ad::gather_rows(t.parameter(a), {2, 0, 2, 1, 2}); });
  expect_grad({&a}, [&](Tape& t) { return ad::group_mean_rows(t.parameter(a), {1, 0, 1}, 2); });
}

TEST_F(OpFixture, ReductionGradients) {
  auto scalar = [](std::initializer_list<Parameter*> params, const std::function<Var(Tape&)>& f) {
    const GradCheck g = gradient_check(nn::ParameterList(params), f);
    EXPECT_LT(g.worst, kTol) << g.worst_name;
  };
  scalar({&a}, [&](Tape& t) { return ad::sum(t.parameter(a)); });
  scalar({&a, &b}, [&](Tape& t) { return ad::mean_squared_error(t.parameter(a), t.parameter(b)); });
  Parameter p{"p", random_matrix(3, 6, rng)}, q{"q", random_matrix(3, 6, rng)};
  scalar({&p, &q}, [&](Tape& t) { return ad::mean_euclidean_error(t.parameter(p), t.parameter(q)); });
}

TEST(Autodiff, LeakyReluValues) {
  Tape t;
  Matrix m(1, 3);
  m << -2.0, 0.0, 3.0;
  const Matrix out = ad::leaky_relu(t.constant(m)).value();
  EXPECT_DOUBLE_EQ(out(0, 0), -2.0 * ad::kLeakySlope);
  EXPECT_DOUBLE_EQ(out(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(out(0, 2), 3.0);
}

TEST(Autodiff, SwapLastAxesMatchesIndexOracle) {
  const Index d0 = 2, d1 = 3, d2 = 4;
  Matrix m(d0 * d1, d2);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(i);
  Tape t;
  const Matrix out = ad::swap_last_axes(t.constant(m), d0, d1, d2).value();
  ASSERT_EQ(out.rows(), d0 * d2);
  ASSERT_EQ(out.cols(), d1);
  // Input element (i, j, k) sits at i + d0 j + d0 d1 k; the output holds it
  // at (i, k, j), i.e. i + d0 k + d0 d2 j.
  for (Index i = 0; i < d0; ++i)
    for (Index j = 0; j < d1; ++j)
      for (Index k = 0; k < d2; ++k)
        EXPECT_EQ(out.data()[i + d0 * k + d0 * d2 * j], m.data()[i + d0 * j + d0 * d1 * k]);
}

TEST(Autodiff, GroupMeanValues) {
  Matrix m(4, 1);
  m << 1, 2, 3, 5;
  Tape t;
  const Matrix out = ad::group_mean_rows(t.constant(m), {0, 1, 0, 1}, 2).value();
  EXPECT_DOUBLE_EQ(out(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(out(1, 0), 3.5);
}

TEST(Autodiff, MeanEuclideanValue) {
  Matrix p = Matrix::Zero(2, 3), q(2, 3);
  q << 3, 4, 0, 0, 0, 2;
  Tape t;
  EXPECT_DOUBLE_EQ(ad::mean_euclidean_error(t.constant(p), t.constant(q)).value()(0, 0), 3.5);
}

TEST(Autodiff, GradientsAccumulateAcrossPasses) {
  Parameter p{"p", Matrix::Constant(2, 2, 1.5)};
  for (int pass = 0; pass < 2; ++pass) {
    Tape t;
    t.backward(ad::sum(ad::scale(t.parameter(p), 3.0)));
  }
  EXPECT_TRUE(p.grad.isApprox(Matrix::Constant(2, 2, 6.0)));
}

TEST(Autodiff, ConstantsAndInferenceTapeLeaveGradientsAlone) {
  Parameter p{"p", Matrix::Ones(2, 2)};
  Tape off(false);
  Var y = ad::sum(ad::matmul(off.parameter(p), off.constant(Matrix::Ones(2, 2))));
  EXPECT_FALSE(off.needs_grad(y));
  off.backward(y);
  EXPECT_EQ(p.grad.norm(), 0.0);

  Tape on;
  Var z = ad::sum(on.constant(Matrix::Ones(2, 2)));
  EXPECT_FALSE(on.needs_grad(z));
}

TEST(Autodiff, RejectsMisuse) {
  Tape t1, t2;
  Var a = t1.constant(Matrix::Ones(2, 2));
  Var b = t2.constant(Matrix::Ones(2, 2));
  EXPECT_THROW(ad::add(a, b), std::logic_error);
  EXPECT_THROW(ad::matmul(a, t1.constant(Matrix::Ones(3, 1))), ShapeError);
  EXPECT_THROW(t1.backward(a), ShapeError);
  EXPECT_THROW(ad::reshape(a, 3, 1), ShapeError);
}
