#include <gris/adapt.hpp>

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "../support/oracles.hpp"

using namespace gris;

namespace {

AdaptState make_state(Eigen::Index d, std::int64_t t0, double s_d, double eps) {
  return AdaptState(Matrix::Identity(d, d), t0, s_d, eps);
}

TEST_CASE("running mean matches hand values and batch oracle") {
  AdaptState s = make_state(2, 0, 1.0, 0.0);
  Vector a(2), b(2);
  a << 0.0, 0.0;
  b << 2.0, 0.0;
  s.update_moments(a);
  CHECK((s.mean() - a).norm() == 0.0);  // single sample: mean is the sample
  s.update_moments(b);
  CHECK(s.mean()[0] == doctest::Approx(1.0));
  CHECK(s.mean()[1] == doctest::Approx(0.0));

  AdaptState big = make_state(3, 0, 1.0, 0.0);
  RngStream rng(3, 0);
  std::vector<Vector> xs;
  for (int i = 0; i < 100; ++i) {
    xs.push_back(rng.normal_vector(3));
    big.update_moments(xs.back());
  }
  CHECK((big.mean() - test::batch_mean(xs)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("covariance recursion: hand examples") {
  Vector a(2), b(2);
  a << 0.0, 0.0;
  b << 2.0, 0.0;

  SUBCASE("s_d = 1, eps = 0") {
    AdaptState s = make_state(2, 0, 1.0, 0.0);
    s.observe(a);
    s.observe(b);
    CHECK(s.scaled_cov()(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s.scaled_cov()(0, 1) == doctest::Approx(0.0));
    CHECK(s.scaled_cov()(1, 1) == doctest::Approx(0.0));
  }
  SUBCASE("ridge shifts the diagonal") {
    AdaptState s = make_state(2, 0, 1.0, 0.1);
    s.observe(a);
    s.observe(b);
    CHECK(s.scaled_cov()(0, 0) == doctest::Approx(2.1).epsilon(1e-12));
    CHECK(s.scaled_cov()(1, 1) == doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("identical samples leave only the ridge") {
    AdaptState s = make_state(2, 0, 1.0, 0.1);
    for (int i = 0; i < 5; ++i) s.observe(a);
    CHECK((s.scaled_cov() - 0.1 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("update_covariance without a prior sample is a contract violation") {
  AdaptState s = make_state(2, 0, 1.0, 0.0);
  CHECK_THROWS_AS(s.update_covariance(Vector::Zero(2)), ContractViolation);
}

TEST_CASE("recursion telescopes to s_d (batch covariance + eps I)") {
  RngStream rng(99, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const int dims[] = {1, 2, 5, 10};
    const Eigen::Index d = dims[rng.uniform_below(4)];
    const int n = 2 + static_cast<int>(rng.uniform_below(49));
    const double s_d = 0.1 + 2.9 * rng.uniform();
    const double eps = 0.5 * rng.uniform();
    AdaptState s(Matrix::Identity(d, d), 0, s_d, eps);
    std::vector<Vector> xs;
    for (int i = 0; i < n; ++i) {
      xs.push_back(2.0 * rng.normal_vector(d));
      s.observe(xs.back());
    }
    Matrix expected = s_d * test::batch_covariance(xs);
    expected.diagonal().array() += s_d * eps;
    CHECK((s.scaled_cov() - expected).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("current_scale switches from C0 at t0") {
  const Matrix C0 = 4.0 * Matrix::Identity(2, 2);
  AdaptState s(C0, 3, 1.0, 0.1);
  RngStream rng(1, 0);
  for (int i = 0; i < 3; ++i) {
    s.observe(rng.normal_vector(2));
    CHECK((s.current_scale() - C0).norm() == 0.0);  // t <= t0
  }
  s.observe(rng.normal_vector(2));
  CHECK(s.t() == 4);
  CHECK((s.current_scale() - C0).norm() > 0.0);
  CHECK((s.current_scale() - s.scaled_cov()).norm() == 0.0);
}

TEST_CASE("t0 = 0 switches immediately") {
  AdaptState s(Matrix::Identity(1, 1), 0, 1.0, 0.25);
  s.observe(Vector::Constant(1, 3.0));
  // One sample: zero sample covariance plus ridge.
  CHECK(s.current_scale()(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("ridge keeps the adapted scale positive definite") {
  RngStream rng(7, 0);
  const double s_d = 1.7;
  const double eps = 1e-3;
  AdaptState s(Matrix::Identity(3, 3), 0, s_d, eps);
  // Degenerate direction: all samples in a 1-D subspace.
  for (int i = 0; i < 30; ++i) {
    Vector x = Vector::Zero(3);
    x[0] = rng.normal();
    s.observe(x);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s.current_scale());
  CHECK(eig.eigenvalues().minCoeff() >= s_d * eps - 1e-12);
}

TEST_CASE("factor reproduces current_scale after every update") {
  RngStream rng(21, 0);
  AdaptState s(0.5 * Matrix::Identity(4, 4), 5, 1.4, 1e-4);  // batch defaults to 1
  for (int i = 0; i < 40; ++i) {
    s.observe(rng.normal_vector(4) * 1.5);
    const Matrix rebuilt = s.factor() * s.factor().transpose();
    const double rel =
        (rebuilt - s.current_scale()).norm() / std::max(1e-300, s.current_scale().norm());
    CHECK(rel < 1e-9);
  }
}

TEST_CASE("factorize: identity, hand Cholesky, and jitter ladder") {
  CHECK((factorize(Matrix::Identity(3, 3), 0.0) - Matrix::Identity(3, 3)).norm() == 0.0);

  Vector dv(2);
  dv << 4.0, 9.0;
  Matrix L = factorize(Matrix(dv.asDiagonal()), 0.0);
  CHECK(L(0, 0) == doctest::Approx(2.0));
  CHECK(L(1, 1) == doctest::Approx(3.0));
  CHECK(L(1, 0) == doctest::Approx(0.0));

  // Indefinite matrix with eigenvalues {3, -1}: j = 0 and j = 0.5 fail, the
  // ladder must settle on some j with L L^T = C + j I.
  Matrix C(2, 2);
  C << 1.0, 2.0, 2.0, 1.0;
  Matrix Lj = factorize(C, 0.5);
  const Matrix reconstructed = Lj * Lj.transpose();
  const double j = (reconstructed - C).diagonal().mean();
  CHECK(j > 1.0);  // anything <= 1 leaves C + jI indefinite
  CHECK((reconstructed - (C + j * Matrix::Identity(2, 2))).cwiseAbs().maxCoeff() < 1e-9);

  // Hopeless case: jitter0 = 0 cannot escalate.
  CHECK_THROWS_AS(factorize(C, 0.0), NumericalError);
}

}  // namespace
