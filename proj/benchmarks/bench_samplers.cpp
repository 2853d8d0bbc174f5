#include <gris/adapt.hpp>
#include <gris/baselines.hpp>
#include <gris/gris.hpp>
#include <gris/proposal.hpp>
#include <gris/resample.hpp>
#include <gris/targets.hpp>

#include <benchmark/benchmark.h>

using namespace gris;

namespace {

void BM_AdaptObserve(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  AdaptState adapt(Matrix::Identity(d, d), 0, 2.38 * 2.38 / d, 1e-6);
  RngStream rng(1, 0);
  for (auto _ : state) {
    adapt.observe(rng.normal_vector(d));
    benchmark::DoNotOptimize(adapt.factor());
  }
}
BENCHMARK(BM_AdaptObserve)->Arg(2)->Arg(10)->Arg(25);

void BM_ProposeAndLogpdf(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  Matrix L = Matrix::Identity(d, d);
  L.diagonal().array() = 1.5;
  const ProposalParams params = ProposalParams::make(Vector::Zero(d), Vector::Zero(d), L);
  RngStream rng(2, 0);
  for (auto _ : state) {
    const Vector x = propose(params, rng);
    benchmark::DoNotOptimize(proposal_logpdf(x, params));
  }
}
BENCHMARK(BM_ProposeAndLogpdf)->Arg(2)->Arg(10)->Arg(25);

void BM_Resample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  RngStream rng(3, 0);
  Vector lw(n);
  for (int i = 0; i < n; ++i) lw[i] = rng.normal();
  const bool systematic = state.range(1) == 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(systematic ? systematic_resample(lw, n, rng)
                                        : multinomial_resample(lw, n, rng));
  }
}
BENCHMARK(BM_Resample)->Args({1000, 0})->Args({1000, 1});

void BM_GrisBanana3000(benchmark::State& state) {
  for (auto _ : state) {
    AnalyticTarget target = banana();
    GrisConfig cfg;
    cfg.population = 20;
    cfg.eval_budget = 3000;
    cfg.drift.delta = 0.5;
    cfg.C0 = Matrix::Identity(2, 2);
    RngStream rng(4, 0);
    const auto init = gaussian_init(Vector::Zero(2), cfg.C0, cfg.population, rng);
    benchmark::DoNotOptimize(gris_run(target.model, cfg, init, rng));
  }
}
BENCHMARK(BM_GrisBanana3000)->Unit(benchmark::kMillisecond);

void BM_TMixtureEval(benchmark::State& state) {
  AnalyticTarget target = t_mixture();
  RngStream rng(5, 0);
  for (auto _ : state) {
    const Vector x = target.mean + rng.normal_vector(10);
    benchmark::DoNotOptimize(target.model.evaluate(x, true));
  }
}
BENCHMARK(BM_TMixtureEval);

void BM_HmcStandardNormal(benchmark::State& state) {
  for (auto _ : state) {
    AnalyticTarget target = gaussian_target(Vector::Zero(2), Matrix::Identity(2, 2));
    HmcConfig cfg;
    cfg.step_size = 0.3;
    cfg.n_leapfrog = 8;
    RngStream rng(6, 0);
    benchmark::DoNotOptimize(
        run_hmc(target.model, cfg, Vector::Zero(2), 3000, 0, rng));
  }
}
BENCHMARK(BM_HmcStandardNormal)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
