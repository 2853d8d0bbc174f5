#include <gris/diagnostics.hpp>

#include <doctest.h>

#include <cmath>
#include <limits>

#include "../support/oracles.hpp"

using namespace gris;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST_CASE("ess_is: equal weights give N, one-hot gives 1") {
  Vector lw = Vector::Zero(4);
  CHECK(ess_is(lw) == doctest::Approx(4.0));

  Vector onehot(5);
  onehot << 0.0, -kInf, -kInf, -kInf, -kInf;
  CHECK(ess_is(onehot) == doctest::Approx(1.0));

  Vector lw2(2);
  lw2 << 0.0, std::log(3.0);  // w_hat = (0.25, 0.75)
  CHECK(ess_is(lw2) == doctest::Approx(1.6));
}

TEST_CASE("ess_is stays within [1, N]") {
  RngStream rng(3, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_below(100));
    Vector lw(n);
    for (int i = 0; i < n; ++i) lw[i] = 3.0 * rng.normal();
    const double e = ess_is(lw);
    CHECK(e >= 1.0 - 1e-12);
    CHECK(e <= n + 1e-9);
  }
}

TEST_CASE("autocorrelation: alternating series has lag-1 value -1") {
  const int n = 100;
  Vector series(n);
  for (int i = 0; i < n; ++i) series[i] = (i % 2 == 0) ? 1.0 : -1.0;
  CHECK(autocorr_at_lag(series, {0.0, 1.0}, 1) == doctest::Approx(-1.0));
}

TEST_CASE("autocorrelation: white noise is near zero, and the formula is scale invariant") {
  RngStream rng(5, 0);
  const int n = 10000;
  Vector series(n);
  for (int i = 0; i < n; ++i) series[i] = rng.normal();
  CHECK(std::abs(autocorr_at_lag(series, {0.0, 1.0}, 1)) < 0.05);

  const double c = 3.7;
  const double r1 = autocorr_at_lag(series, {0.0, 1.0}, 7);
  const double r2 = autocorr_at_lag(Vector(c * series), {0.0, c * c}, 7);
  CHECK(r1 == doctest::Approx(r2));
}

TEST_CASE("autocorrelation input contracts") {
  Vector series = Vector::Zero(10);
  CHECK_THROWS_AS(autocorr_at_lag(series, {0.0, 0.0}, 1), ContractViolation);
  CHECK_THROWS_AS(autocorr_at_lag(series, {0.0, 1.0}, 10), ContractViolation);
  CHECK_THROWS_AS(autocorr_at_lag(series, {0.0, 1.0}, 0), ContractViolation);
}

TEST_CASE("ess_mc: iid series scores N, single sample scores 1") {
  RngStream rng(9, 0);
  const int n = 10000;
  Vector series(n);
  for (int i = 0; i < n; ++i) series[i] = rng.normal();
  const EssMcResult r = ess_mc(series, {0.0, 1.0});
  CHECK(r.ess >= 0.8 * n);
  CHECK(r.ess <= 1.2 * n);

  CHECK(ess_mc(Vector::Constant(1, 2.0), {0.0, 1.0}).ess == doctest::Approx(1.0));
}

TEST_CASE("ess_mc: MA(1) series with rho_1 = 1/2 scores about N/2") {
  RngStream rng(13, 0);
  const int n = 10000;
  Vector z(n + 1);
  for (int i = 0; i <= n; ++i) z[i] = rng.normal();
  Vector series(n);
  for (int i = 0; i < n; ++i) series[i] = (z[i + 1] + z[i]) / std::sqrt(2.0);
  const EssMcResult r = ess_mc(series, {0.0, 1.0});
  // Expected N / (1 + 2 * 0.5 (1 - 1/N)) ~ N/2, give sampling noise some room.
  CHECK(r.ess > 0.4 * n);
  CHECK(r.ess < 0.6 * n);
}

TEST_CASE("ess_mc_min: iid normal chain scores about N for both functions") {
  RngStream rng(17, 0);
  const int n = 10000;
  std::vector<Vector> chain(n);
  for (int i = 0; i < n; ++i) chain[static_cast<std::size_t>(i)] = rng.normal_vector(1);
  GroundTruth truth{Vector::Zero(1), Vector::Ones(1), "analytic", std::nullopt, std::nullopt};
  const EssMcResult r = ess_mc_min(chain, truth);
  CHECK(r.ess > 0.8 * n);
  CHECK(r.ess <= n);
}

TEST_CASE("ess_mc_min: duplicated samples score about N/3") {
  RngStream rng(19, 0);
  const int half = 5000;
  std::vector<Vector> chain;
  chain.reserve(2 * half);
  for (int i = 0; i < half; ++i) {
    const Vector x = rng.normal_vector(1);
    chain.push_back(x);
    chain.push_back(x);
  }
  GroundTruth truth{Vector::Zero(1), Vector::Ones(1), "analytic", std::nullopt, std::nullopt};
  const double n = 2.0 * half;
  const EssMcResult r = ess_mc_min(chain, truth);
  // Lag-1 autocorrelation of the duplicated series is ~1/2 (every other pair
  // is a duplicate), so the truncated formula gives roughly N / 2.
  CHECK(r.ess > 0.3 * n);
  CHECK(r.ess < 0.7 * n);
}

TEST_CASE("ess_mc is invariant under affine shifts of series and truth") {
  RngStream rng(23, 0);
  const int n = 2000;
  Vector series(n);
  for (int i = 0; i < n; ++i) series[i] = rng.normal() + 0.4 * (i > 0 ? series[i - 1] : 0.0);
  const double shift = 17.5;
  const EssMcResult base = ess_mc(series, {0.0, 1.0});
  const EssMcResult shifted = ess_mc(Vector(series.array() + shift), {shift, 1.0});
  CHECK(base.ess == doctest::Approx(shifted.ess).epsilon(1e-12));
  CHECK(base.ess > 0.0);
  CHECK(base.ess <= n);
}

TEST_CASE("ess_mc_min: constant chain surfaces the degenerate-variance error") {
  std::vector<Vector> chain(10, Vector::Zero(2));
  GroundTruth truth{Vector::Zero(2), Vector::Zero(2), "analytic", std::nullopt, std::nullopt};
  CHECK_THROWS_AS(ess_mc_min(chain, truth), ContractViolation);
}

TEST_CASE("max_se hand values") {
  GroundTruth truth{Vector::Zero(2), Vector::Ones(2), "analytic", std::nullopt, std::nullopt};
  CHECK(max_se(Vector::Zero(2), Vector::Ones(2), truth) == doctest::Approx(0.0));

  Vector em(2), ev(2);
  em << 0.1, 0.0;
  ev << 1.0, 1.2;
  CHECK(max_se(em, ev, truth) == doctest::Approx(0.04));

  // Permuting dimensions leaves the maximum unchanged.
  Vector em2(2), ev2(2);
  em2 << 0.0, 0.1;
  ev2 << 1.2, 1.0;
  CHECK(max_se(em2, ev2, truth) == doctest::Approx(0.04));
}

RunSummary make_run(const std::vector<double>& means, std::uint64_t stride = 100) {
  RunSummary run;
  std::uint64_t count = stride;
  for (double m : means) {
    Checkpoint cp;
    cp.eval_count = count;
    cp.mean = Vector::Constant(1, m);
    cp.variance = Vector::Ones(1);
    count += stride;
    run.checkpoints.push_back(std::move(cp));
  }
  return run;
}

TEST_CASE("aggregate: identical runs have zero variance, MSE = bias^2") {
  std::vector<RunSummary> runs{make_run({1.0, 2.0}), make_run({1.0, 2.0})};
  GroundTruth truth{Vector::Zero(1), Vector::Ones(1), "analytic", std::nullopt, std::nullopt};
  const AggregateCurves agg = aggregate_runs(runs, truth);
  CHECK(agg.mean_estimate.variance(0, 0) == doctest::Approx(0.0));
  CHECK(agg.mean_estimate.mse(0, 0) == doctest::Approx(1.0));
  CHECK(agg.mean_estimate.mse(1, 0) == doctest::Approx(4.0));
  CHECK(agg.mean_estimate.bias2(1, 0) == doctest::Approx(4.0));
}

TEST_CASE("aggregate: symmetric pair has zero bias and MSE a^2") {
  const double theta = 0.7, a = 0.3;
  std::vector<RunSummary> runs{make_run({theta + a}), make_run({theta - a})};
  GroundTruth truth{Vector::Constant(1, theta), Vector::Ones(1), "analytic", std::nullopt,
                    std::nullopt};
  const AggregateCurves agg = aggregate_runs(runs, truth);
  CHECK(agg.mean_estimate.bias2(0, 0) == doctest::Approx(0.0));
  CHECK(agg.mean_estimate.mse(0, 0) == doctest::Approx(a * a));
}

TEST_CASE("aggregate: decomposition MSE = bias^2 + (R-1)/R var holds on random ensembles") {
  RngStream rng(23, 0);
  std::vector<RunSummary> runs;
  const int R = 7;
  for (int r = 0; r < R; ++r) {
    runs.push_back(make_run({rng.normal(), rng.normal() + 1.0, rng.normal() - 2.0}));
  }
  GroundTruth truth{Vector::Constant(1, 0.25), Vector::Ones(1), "analytic", std::nullopt,
                    std::nullopt};
  const AggregateCurves agg = aggregate_runs(runs, truth);
  for (int cp = 0; cp < 3; ++cp) {
    const double lhs = agg.mean_estimate.mse(cp, 0);
    const double rhs = agg.mean_estimate.bias2(cp, 0) +
                       agg.mean_estimate.variance(cp, 0) * (R - 1.0) / R;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("aggregate rejects misaligned checkpoints") {
  std::vector<RunSummary> runs{make_run({1.0, 2.0}, 100), make_run({1.0, 2.0}, 150)};
  GroundTruth truth{Vector::Zero(1), Vector::Ones(1), "analytic", std::nullopt, std::nullopt};
  CHECK_THROWS_AS(aggregate_runs(runs, truth), ContractViolation);
}

}  // namespace
