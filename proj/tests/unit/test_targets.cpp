#include <gris/targets.hpp>

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "../support/oracles.hpp"
#include "../support/synth_credit.hpp"

using namespace gris;

#ifndef GRIS_TEST_DATA_DIR
#define GRIS_TEST_DATA_DIR "."
#endif

namespace {

const std::string kCreditPath = std::string(GRIS_TEST_DATA_DIR) + "/german_synthetic.tsv";

void check_gradients(AnalyticTarget& t, double box, int points, std::uint64_t seed) {
  RngStream rng(seed, 0);
  auto logf = [&](const Vector& x) { return t.model.evaluate(x, false).log_density; };
  for (int i = 0; i < points; ++i) {
    Vector x = t.mean + box * rng.normal_vector(t.model.dim());
    const Vector analytic = *t.model.evaluate(x, true).gradient;
    const Vector fd = test::fd_gradient(logf, x);
    const double rel = (fd - analytic).norm() / std::max(analytic.norm(), 1e-8);
    CHECK(rel < 1e-5);
  }
}

TEST_CASE("gaussian grid: symmetry, moments, gradients") {
  AnalyticTarget grid = gaussian_grid();
  CHECK(grid.mean.norm() < 1e-12);  // radial weights on a symmetric lattice
  CHECK(grid.log_normalizer.has_value());
  CHECK(*grid.log_normalizer == doctest::Approx(0.0));

  // Quadrature oracle for the normalizer and both moments.
  auto f = [&](double x, double y) {
    Vector v(2);
    v << x, y;
    return std::exp(grid.model.evaluate(v, false).log_density);
  };
  const double z = test::quadrature_2d(f, -14.0, 14.0, -14.0, 14.0, 560);
  CHECK(z == doctest::Approx(1.0).epsilon(1e-4));
  const double ex = test::quadrature_2d([&](double x, double y) { return x * f(x, y); }, -14.0,
                                        14.0, -14.0, 14.0, 560);
  CHECK(std::abs(ex - grid.mean[0]) < 1e-4);
  const double exx = test::quadrature_2d([&](double x, double y) { return x * x * f(x, y); },
                                         -14.0, 14.0, -14.0, 14.0, 560);
  CHECK(std::abs(exx - grid.cov(0, 0)) < 1e-3);

  check_gradients(grid, 4.0, 50, 101);
}

TEST_CASE("gaussian grid: single-component degenerate spec collapses to one Gaussian") {
  GaussianGridSpec spec;
  spec.grid_side = 1;
  AnalyticTarget g = gaussian_grid(spec);
  Vector x(2);
  x << 0.7, -0.2;
  const double expected = -std::log(2.0 * std::numbers::pi) - 0.5 * x.squaredNorm();
  CHECK(g.model.evaluate(x, false).log_density == doctest::Approx(expected));
}

TEST_CASE("banana: hand values, moments, gradients") {
  AnalyticTarget b = banana();
  Vector origin = Vector::Zero(2);
  const Evaluation ev = b.model.evaluate(origin, true);
  CHECK(ev.log_density == doctest::Approx(-4.5));
  CHECK((*ev.gradient)[0] == doctest::Approx(0.0));
  CHECK((*ev.gradient)[1] == doctest::Approx(-3.0));

  CHECK(b.mean.norm() == 0.0);
  CHECK(b.cov(0, 0) == doctest::Approx(100.0));
  CHECK(b.cov(1, 1) == doctest::Approx(19.0));  // 1 + 2 b^2 s^2

  check_gradients(b, 5.0, 50, 202);
}

TEST_CASE("banana: factorized direct draws match the analytic moments") {
  const BananaSpec spec;
  RngStream rng(55, 0);
  const int n = 200000;
  std::vector<double> x1(n), x2(n);
  for (int i = 0; i < n; ++i) {
    const double a = std::sqrt(spec.s) * rng.normal();
    const double bb = spec.b * (a * a - spec.s) + rng.normal();
    x1[static_cast<std::size_t>(i)] = a;
    x2[static_cast<std::size_t>(i)] = bb;
  }
  const double se1 = test::sample_sd(x1) / std::sqrt(static_cast<double>(n));
  const double se2 = test::sample_sd(x2) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(test::sample_mean(x1)) < 4.0 * se1);
  CHECK(std::abs(test::sample_mean(x2)) < 4.0 * se2);
  // Variance of the sample variance ~ 2 sigma^4 (n-1)... use a generous band.
  CHECK(test::sample_sd(x1) * test::sample_sd(x1) == doctest::Approx(100.0).epsilon(0.03));
  CHECK(test::sample_sd(x2) * test::sample_sd(x2) == doctest::Approx(19.0).epsilon(0.05));
}

TEST_CASE("t mixture: symmetry for mirrored components, stationarity, gradients") {
  SUBCASE("mirrored pair is an even density") {
    TMixtureSpec spec;
    spec.n_components = 2;
    spec.dim = 3;
    Vector w(2);
    w << 0.5, 0.5;
    spec.weights = w;
    Vector mu(3);
    mu << 1.0, -2.0, 0.5;
    spec.means = {mu, -mu};
    spec.scales = {Matrix::Identity(3, 3), Matrix::Identity(3, 3)};
    AnalyticTarget t = t_mixture(spec);
    RngStream rng(66, 0);
    for (int i = 0; i < 20; ++i) {
      const Vector x = 3.0 * rng.normal_vector(3);
      CHECK(t.model.evaluate(x, false).log_density ==
            doctest::Approx(t.model.evaluate(-x, false).log_density));
    }
  }
  SUBCASE("single standard component has its mode at the origin") {
    TMixtureSpec spec;
    spec.n_components = 1;
    spec.dim = 4;
    spec.weights = Vector::Ones(1);
    spec.means = {Vector::Zero(4)};
    spec.scales = {Matrix::Identity(4, 4)};
    AnalyticTarget t = t_mixture(spec);
    CHECK((*t.model.evaluate(Vector::Zero(4), true).gradient).norm() == doctest::Approx(0.0));
  }
  SUBCASE("generated 10-D instance: finite-difference gradients") {
    AnalyticTarget t = t_mixture();
    check_gradients(t, 3.0, 50, 303);
  }
}

TEST_CASE("t mixture: moments match a direct-simulation oracle") {
  AnalyticTarget t = t_mixture();
  const TMixtureSpec spec;  // defaults used by t_mixture()
  // Redraw the pinned instance so the oracle can sample from it directly.
  RngStream gen(spec.gen_seed, 0);
  std::vector<Vector> means;
  std::vector<Matrix> factors;
  for (int c = 0; c < 3; ++c) {
    Vector mu(10);
    for (int i = 0; i < 10; ++i) mu[i] = spec.mean_box * (2.0 * gen.uniform() - 1.0);
    Matrix A = Matrix::Zero(10, 10);
    for (int i = 0; i < 10; ++i) {
      A(i, i) = std::sqrt(gen.chi_squared(10 - i));
      for (int j = 0; j < i; ++j) A(i, j) = gen.normal();
    }
    Matrix W = A * A.transpose();
    Matrix S = W.llt().solve(Matrix::Identity(10, 10));
    S = 0.5 * (S + S.transpose());
    means.push_back(mu);
    factors.push_back(Matrix(S.llt().matrixL()));
  }
  Vector w(3);
  w << 0.5, 0.3, 0.2;

  RngStream rng(77, 1);
  const int n = 1000000;
  Vector sum = Vector::Zero(10);
  Vector sum2 = Vector::Zero(10);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    const int c = u < 0.5 ? 0 : (u < 0.8 ? 1 : 2);
    const double chi = rng.chi_squared(10);
    const Vector x = means[static_cast<std::size_t>(c)] +
                     std::sqrt(10.0 / chi) *
                         (factors[static_cast<std::size_t>(c)] * rng.normal_vector(10));
    sum += x;
    sum2 += x.array().square().matrix();
  }
  const Vector mean_hat = sum / n;
  const Vector second_hat = sum2 / n;
  for (int i = 0; i < 10; ++i) {
    const double var = t.cov(i, i);
    const double se_mean = std::sqrt(var / n);
    CHECK(std::abs(mean_hat[i] - t.mean[i]) < 4.0 * se_mean);
    // E[x^2] comparison with a rough fourth-moment SE bound for the heavy
    // tails (kurtosis of t_10 is 4; be generous).
    const double se_second = std::sqrt(8.0 * var * var / n) + 4.0 * std::abs(t.mean[i]) * se_mean;
    const double second_true = var + t.mean[i] * t.mean[i];
    CHECK(std::abs(second_hat[i] - second_true) < 6.0 * se_second);
  }
}

TEST_CASE("gaussian_target agrees with the independent reference implementation") {
  Vector mu(3);
  mu << 0.5, -1.0, 2.0;
  Matrix cov(3, 3);
  cov << 2.0, 0.4, 0.0, 0.4, 1.5, -0.3, 0.0, -0.3, 0.9;
  const double log_scale = 0.7;
  AnalyticTarget impl = gaussian_target(mu, cov, log_scale);
  TargetModel reference = test::mvn_target(mu, cov, log_scale);
  RngStream rng(88, 0);
  for (int i = 0; i < 30; ++i) {
    const Vector x = mu + 2.0 * rng.normal_vector(3);
    const Evaluation a = impl.model.evaluate(x, true);
    const Evaluation b = reference.evaluate(x, true);
    CHECK(a.log_density == doctest::Approx(b.log_density).epsilon(1e-12));
    CHECK((*a.gradient - *b.gradient).norm() < 1e-10);
  }
  CHECK((impl.mean - mu).norm() == 0.0);
  CHECK(*impl.log_normalizer == log_scale);
  const GroundTruth truth = impl.ground_truth();
  CHECK((truth.variance - cov.diagonal()).norm() == 0.0);
}

TEST_CASE("german credit loader: shape, standardization, intercept") {
  LogRegModel model = load_german_credit(kCreditPath);
  CHECK(model.n() == 1000);
  CHECK(model.dim() == 25);
  for (int j = 0; j < 24; ++j) {
    CHECK(std::abs(model.X.col(j).mean()) < 1e-10);
    CHECK(model.X.col(j).squaredNorm() / 1000.0 == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK((model.X.col(24).array() == 1.0).all());
  for (int i = 0; i < 1000; ++i) CHECK((model.y[i] == 0.0 || model.y[i] == 1.0));
}

TEST_CASE("german credit loader: validation errors carry line context") {
  auto write_and_load = [](const std::string& content) {
    const std::string path = "/tmp/gris_bad_credit.tsv";
    std::ofstream out(path);
    out << content;
    out.close();
    return load_german_credit(path);
  };

  {
    std::ifstream in(kCreditPath);
    std::stringstream ss;
    std::string line;
    int n = 0;
    while (std::getline(in, line) && n < 999) {
      ss << line << '\n';
      ++n;
    }
    CHECK_THROWS_WITH_AS(write_and_load(ss.str()), doctest::Contains("1000"),
                         ContractViolation);
  }
  {
    std::ifstream in(kCreditPath);
    std::stringstream ss;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      if (n == 0) {
        // Corrupt the first label to 3.
        const auto pos = line.find_last_of(' ');
        line = line.substr(0, pos) + " 3";
      }
      ss << line << '\n';
      ++n;
    }
    CHECK_THROWS_WITH_AS(write_and_load(ss.str()), doctest::Contains("label"),
                         ContractViolation);
  }
}

TEST_CASE("logistic posterior: hand values at beta = 0 and gradients") {
  LogRegModel model = load_german_credit(kCreditPath);
  TargetModel post = logreg_posterior(model);
  const Vector zero = Vector::Zero(25);
  const Evaluation ev = post.evaluate(zero, true);
  CHECK(ev.log_density == doctest::Approx(-1000.0 * std::log(2.0)));
  const Vector expected_grad = model.X.transpose() * (model.y.array() - 0.5).matrix();
  CHECK((*ev.gradient - expected_grad).norm() < 1e-9);

  RngStream rng(44, 0);
  auto logf = [&](const Vector& b) { return post.evaluate(b, false).log_density; };
  for (int i = 0; i < 20; ++i) {
    const Vector beta = 0.3 * rng.normal_vector(25);
    const Vector analytic = *post.evaluate(beta, true).gradient;
    const Vector fd = test::fd_gradient(logf, beta);
    CHECK((fd - analytic).norm() / analytic.norm() < 1e-5);
  }
}

TEST_CASE("laplace approximation recovers a Gaussian exactly") {
  Vector mu(3);
  mu << 1.0, -2.0, 0.5;
  Matrix cov(3, 3);
  cov << 2.0, 0.3, 0.0, 0.3, 1.0, -0.2, 0.0, -0.2, 0.5;
  TargetModel t = test::mvn_target(mu, cov);
  const LaplaceResult lap = laplace_approx(t, Vector::Zero(3));
  CHECK((lap.mode - mu).norm() < 1e-6);
  CHECK((lap.cov - cov).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("laplace approximation: banana mode and gradient tolerance") {
  AnalyticTarget b = banana();
  const LaplaceResult lap = laplace_approx(b.model, Vector::Zero(2));
  CHECK((*b.model.evaluate(lap.mode, true).gradient).norm() < 1e-8);
  CHECK(lap.mode[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(lap.mode[1] == doctest::Approx(-3.0));  // x2 = b (x1^2 - s) at x1 = 0
}

TEST_CASE("laplace approximation on the logistic posterior matches a Newton oracle") {
  LogRegModel model = load_german_credit(kCreditPath);
  TargetModel post = logreg_posterior(model);
  const LaplaceResult lap = laplace_approx(post, Vector::Zero(25));

  // Independent oracle: full Newton with the analytic Hessian.
  Vector beta = Vector::Zero(25);
  for (int iter = 0; iter < 50; ++iter) {
    const Vector eta = model.X * beta;
    Vector s(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      s[i] = eta[i] >= 0 ? 1.0 / (1.0 + std::exp(-eta[i]))
                         : std::exp(eta[i]) / (1.0 + std::exp(eta[i]));
    }
    const Vector grad =
        model.X.transpose() * (model.y - s) - beta / model.sigma2_prior;
    Matrix H = model.X.transpose() * (s.array() * (1.0 - s.array())).matrix().asDiagonal() *
               model.X;
    H.diagonal().array() += 1.0 / model.sigma2_prior;
    beta += H.llt().solve(grad);
    if (grad.norm() < 1e-12) break;
  }
  CHECK((lap.mode - beta).norm() < 1e-6);
}

TEST_CASE("defensive IS: perfect proposal gives equal weights and full ESS") {
  Vector mu(2);
  mu << 0.5, -0.5;
  Matrix cov(2, 2);
  cov << 1.5, 0.2, 0.2, 0.8;
  TargetModel t = test::mvn_target(mu, cov);
  LaplaceResult lap{mu, cov};
  RngStream rng(5, 0);
  DefensiveIsOptions opts;
  opts.alpha = 1.0;
  const DefensiveIsResult r = defensive_is_ground_truth(t, lap, 5000, rng, opts);
  CHECK(r.ess == doctest::Approx(5000.0).epsilon(1e-9));
  CHECK(r.log_evidence == doctest::Approx(0.0).epsilon(1e-9));
  CHECK((r.mean - mu).norm() < 0.1);
}

TEST_CASE("defensive IS: recovers a known normalizing constant") {
  TargetModel t = test::mvn_target(Vector::Zero(1), Matrix::Identity(1, 1), std::log(2.0));
  LaplaceResult lap{Vector::Zero(1), Matrix::Identity(1, 1)};
  RngStream rng(6, 0);
  DefensiveIsOptions opts;
  opts.alpha = 1.0;
  const DefensiveIsResult r = defensive_is_ground_truth(t, lap, 100000, rng, opts);
  CHECK(r.log_evidence == doctest::Approx(std::log(2.0)).epsilon(0.02));
}

TEST_CASE("defensive IS: mixture proposal flags a low ESS floor") {
  TargetModel t = test::mvn_target(Vector::Zero(1), Matrix::Identity(1, 1));
  LaplaceResult lap{Vector::Zero(1), Matrix::Identity(1, 1)};
  RngStream rng(7, 0);
  DefensiveIsOptions opts;
  opts.ess_floor = 1e9;  // impossible floor
  const DefensiveIsResult r = defensive_is_ground_truth(t, lap, 1000, rng, opts);
  CHECK(r.ess_below_floor);
  CHECK(r.ess > 500.0);
}

}  // namespace
