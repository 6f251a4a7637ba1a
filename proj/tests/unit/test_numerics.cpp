#include "csbayes/adam.hpp"
#include "csbayes/autodiff.hpp"
#include "csbayes/error.hpp"
#include "csbayes/linalg.hpp"
#include "csbayes/parallel.hpp"
#include "csbayes/rng.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace csbayes;
using testutil::random_matrix;
using testutil::random_spd;

namespace {

void expect_code(ErrorCode code, const std::function<void()>& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(Cholesky, IdentityFactorIsIdentity) {
  const auto f = cholesky(Matrix::Identity(3, 3));
  EXPECT_EQ(f.lower(), Matrix::Identity(3, 3));
}

TEST(Cholesky, TwoByTwoFactor) {
  Matrix m(2, 2);
  m << 4, 2, 2, 3;
  const Matrix l = cholesky(m).lower();
  EXPECT_NEAR(l(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(l(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(l(1, 1), std::sqrt(2.0), 1e-15);
  EXPECT_EQ(l(0, 1), 0.0);
  EXPECT_LT((l * l.transpose() - m).norm() / m.norm(), 1e-10);
}

TEST(Cholesky, IndefiniteMatrixRejected) {
  Matrix m(2, 2);
  m << 1, 2, 2, 1;
  expect_code(ErrorCode::NotPositiveDefinite, [&] { cholesky(m); });
}

TEST(Cholesky, AsymmetricAndNonSquareRejected) {
  Matrix m(2, 2);
  m << 2, 1, 0, 2;
  EXPECT_THROW(cholesky(m), Error);
  EXPECT_THROW(cholesky(Matrix::Ones(2, 3)), Error);
}

TEST(SolvePsd, IdentityAndScaled) {
  SeededRng rng(1);
  const Matrix b = random_matrix(3, 2, rng);
  EXPECT_EQ(solve_psd(cholesky(Matrix::Identity(3, 3)), b), b);
  EXPECT_LT((solve_psd(cholesky(2.0 * Matrix::Identity(3, 3)), b) - b / 2.0).norm(), 1e-15);
}

TEST(SolvePsd, DimensionMismatch) {
  expect_code(ErrorCode::DimensionMismatch, [] { solve_psd(cholesky(Matrix::Identity(3, 3)), Matrix::Ones(4, 1)); });
}

TEST(LogdetPsd, KnownValues) {
  EXPECT_NEAR(logdet_psd(cholesky(Matrix::Identity(4, 4))), 0.0, 1e-15);
  EXPECT_NEAR(logdet_psd(cholesky(2.0 * Matrix::Identity(3, 3))), 3.0 * std::log(2.0), 1e-14);
}

TEST(LogdetPsd, MatchesCofactorExpansion4x4) {
  SeededRng rng(2);
  for (int t = 0; t < 10; ++t) {
    const Matrix m = random_spd(4, rng, 50.0);
    EXPECT_NEAR(logdet_psd(cholesky(m)), std::log(oracle::cofactor_determinant(m)), 1e-10);
  }
}

// Every SPD matrix up to 8x8 with condition number below 1e6.
TEST(PsdProperty, ResidualAndLogdetAcrossSizes) {
  SeededRng rng(3);
  for (int n = 1; n <= 8; ++n) {
    for (int t = 0; t < 10; ++t) {
      const Matrix m = random_spd(n, rng, 1e5);
      const Matrix b = random_matrix(n, 3, rng);
      const auto f = cholesky(m);
      const Matrix x = solve_psd(f, b);
      EXPECT_LT((m * x - b).norm() / b.norm(), 1e-8);
      const double det = oracle::determinant(m);
      EXPECT_LT(std::abs(logdet_psd(f) - std::log(det)) / std::max(1.0, std::abs(std::log(det))), 1e-8);
      EXPECT_LT((f.reconstruct() - m).norm() / m.norm(), 1e-10);
      EXPECT_TRUE((f.lower().diagonal().array() > 0).all());
    }
  }
}

TEST(Logsumexp, KnownValues) {
  EXPECT_NEAR(logsumexp(std::vector<double>{0.0, 0.0}), std::log(2.0), 1e-15);
  EXPECT_NEAR(logsumexp(std::vector<double>{1000.0, 1000.0}), 1000.0 + std::log(2.0), 1e-12);
  EXPECT_NEAR(logsumexp(std::vector<double>{-700.0, -700.0}), -700.0 + std::log(2.0), 1e-12);
  expect_code(ErrorCode::EmptyInput, [] { logsumexp(std::vector<double>{}); });
}

TEST(Logsumexp, MatchesNaiveSumAtSmallMagnitudes) {
  SeededRng rng(4);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> v(10);
    for (auto& x : v) x = rng.uniform(-5, 5);
    EXPECT_NEAR(logsumexp(v), oracle::naive_logsumexp(v), 1e-13);
  }
}

TEST(Rng, SameSeedSameSequence) {
  SeededRng a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, SplitStreamsAreIndependentOfDrawOrder) {
  SeededRng base(9);
  const SeededRng s3 = base.split(3);
  base.normal();
  SeededRng again = base.split(3);
  SeededRng first = s3;
  for (int i = 0; i < 10; ++i) EXPECT_EQ(first.normal(), again.normal());
}

TEST(Rng, NormalMoments) {
  SeededRng rng(11);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Rng, UniformIndexAndPermutation) {
  SeededRng rng(12);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) ++counts[rng.uniform_index(5)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
  auto p = rng.permutation(50);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], i);
}

TEST(Parallel, RethrowsLowestFailingIndex) {
  try {
    parallel_for(
        100,
        [](std::size_t i) {
          if (i == 17 || i == 63) throw std::runtime_error("index " + std::to_string(i));
        },
        4);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "index 17");
  }
}

TEST(Parallel, VisitsEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 3);
  EXPECT_EQ(std::accumulate(hits.begin(), hits.end(), 0), 1000);
  EXPECT_EQ(*std::min_element(hits.begin(), hits.end()), 1);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Parameter p("w", Matrix::Constant(2, 2, 0.5));
  std::vector<Parameter*> ps{&p};
  auto st = make_adam(ps, 0.1);
  adam_step(st, ps);
  EXPECT_EQ(p.value, Matrix::Constant(2, 2, 0.5));
  EXPECT_EQ(st.steps, 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter p("w", Matrix::Zero(1, 3));
  p.grad << 2.0, -0.5, 1e-3;
  std::vector<Parameter*> ps{&p};
  auto st = make_adam(ps, 0.01);
  adam_step(st, ps);
  // m_hat = g, v_hat = g^2 after bias correction, so the step is lr * g / (|g| + eps)
  for (int j = 0; j < 3; ++j) {
    const double g = p.grad(0, j);
    EXPECT_NEAR(p.value(0, j), -0.01 * g / (std::abs(g) + 1e-8), 1e-15);
  }
}

TEST(Adam, DeterministicAndRejectsNonFinite) {
  Parameter a("w", Matrix::Constant(1, 2, 1.0)), b("w", Matrix::Constant(1, 2, 1.0));
  std::vector<Parameter*> pa{&a}, pb{&b};
  auto sa = make_adam(pa, 0.05), sb = make_adam(pb, 0.05);
  for (int i = 0; i < 2; ++i) {
    a.grad << 0.3, -0.2;
    b.grad << 0.3, -0.2;
    adam_step(sa, pa);
    adam_step(sb, pb);
  }
  EXPECT_EQ(a.value, b.value);
  a.grad(0, 0) = std::nan("");
  const Matrix before = a.value;
  expect_code(ErrorCode::NonFiniteGradient, [&] { adam_step(sa, pa); });
  EXPECT_EQ(a.value, before);
}

TEST(Autodiff, SquareGradient) {
  Parameter w("w", Matrix::Constant(1, 1, 3.0));
  Tape t;
  t.backward(t.sum(t.square(t.parameter(w))));
  EXPECT_DOUBLE_EQ(w.grad(0, 0), 6.0);
}

TEST(Autodiff, NonScalarOutputRejected) {
  Parameter w("w", Matrix::Ones(2, 1));
  Tape t;
  const Var v = t.square(t.parameter(w));
  expect_code(ErrorCode::NoScalarOutput, [&] { t.backward(v); });
}

TEST(Autodiff, DeadReluBlocksGradient) {
  Parameter w("w", Matrix::Ones(2, 1));
  Tape t;
  Matrix x(2, 1);
  x << -1.0, 2.0;
  const Var h = t.relu(t.mul(t.parameter(w), t.constant(x)));
  t.backward(t.sum(h));
  EXPECT_EQ(w.grad(0, 0), 0.0);
  EXPECT_EQ(w.grad(1, 0), 2.0);
}

TEST(Autodiff, ForwardReplayIsBitIdentical) {
  SeededRng rng(5);
  Parameter w("w", random_matrix(3, 4, rng)), b("b", random_matrix(3, 1, rng));
  const Matrix x = random_matrix(4, 5, rng);
  auto run = [&] {
    Tape t;
    return Matrix(t.value(t.softplus(t.affine(t.parameter(w), t.constant(x), t.parameter(b)))));
  };
  EXPECT_EQ(run(), run());
}

// Gradient of a scalar built from every op kind against central differences.
TEST(Autodiff, AllOpsMatchFiniteDifferences) {
  SeededRng rng(6);
  for (int point = 0; point < 20; ++point) {
    Parameter w1("w1", random_matrix(4, 3, rng, 0.7)), b1("b1", random_matrix(4, 1, rng, 0.3));
    Parameter w2("w2", random_matrix(4, 4, rng, 0.7)), b2("b2", random_matrix(4, 1, rng, 0.3));
    const Matrix x = random_matrix(3, 5, rng);
    auto build = [&](Tape& t) {
      const Var h = t.relu(t.affine(t.parameter(w1), t.constant(x), t.parameter(b1)));
      const Var o = t.affine(t.parameter(w2), h, t.parameter(b2));
      const Var top = t.rows(o, 0, 2), bottom = t.rows(o, 2, 2);
      const Var g = t.add_scalar(t.softplus(bottom), 0.1);
      const Var e = t.exp(t.scale(top, 0.5));
      const Var q = t.sub(t.mul(e, t.log(g)), t.square(top));
      return t.add(t.sum(q), t.scale(t.sum(t.add(g, e)), 0.3));
    };
    auto value = [&] {
      Tape t;
      return t.value(build(t))(0, 0);
    };
    Tape t;
    for (auto* p : {&w1, &b1, &w2, &b2}) p->zero_grad();
    t.backward(build(t));
    for (auto* p : {&w1, &b1, &w2, &b2}) {
      for (Eigen::Index i = 0; i < p->value.size(); ++i) {
        const double fd = oracle::central_difference(value, p->value.data()[i], 1e-6);
        const double an = p->grad.data()[i];
        EXPECT_LE(std::abs(fd - an), 1e-4 * std::max(1.0, std::abs(fd))) << p->name << "[" << i << "]";
      }
    }
  }
}

TEST(Autodiff, CustomOpGradientFlows) {
  Parameter w("w", Matrix::Constant(2, 1, 1.5));
  Tape t;
  const Var in = t.parameter(w);
  Matrix val(1, 1);
  val(0, 0) = t.value(in).squaredNorm();
  const Matrix g = 2.0 * t.value(in);
  const Var out = t.custom({in}, val, [in, g](Tape& tt, const Matrix& up) { tt.accumulate(in, up(0, 0) * g); });
  t.backward(out);
  EXPECT_DOUBLE_EQ(w.grad(0, 0), 3.0);
}
