#pragma once

#include <gris/adapt.hpp>
#include <gris/proposal.hpp>
#include <gris/resample.hpp>
#include <gris/rng.hpp>
#include <gris/target.hpp>
#include <gris/types.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace gris {

/// Tuning of one gradient importance sampling run. Exactly one of
/// `sample_size` (stop once that many post-seed samples are in S) and
/// `eval_budget` (stop before an iteration would exceed the budget) must be
/// set.
struct GrisConfig {
  int population = 20;  // p >= 2
  std::optional<std::int64_t> sample_size;
  std::optional<std::uint64_t> eval_budget;

  DriftConfig drift;

  // Adaptation. Negative / empty values resolve to the defaults
  // t0 = population, C0 = (0.1^2 / d) I, s_d = 2.38^2 / d, eps = 1e-6,
  // batch = population (one covariance refactorization per iteration).
  std::int64_t t0 = -1;
  Matrix C0;
  double s_d = -1.0;
  double eps = 1e-6;
  int adapt_batch = -1;

  ResampleScheme resample_scheme = ResampleScheme::kMultinomial;
  std::uint64_t checkpoint_stride = 100;
};

/// Tempering bridge from an easy, normalized g0 to the target f:
/// geometric  g_t  proportional to  g0^(1-rho_t) f^(rho_t),
/// mixture    g_t  proportional to  (1-rho_t) g0 + rho_t f,
/// over an increasing schedule rho_1 <= ... <= rho_T = 1.
struct BridgeSpec {
  enum class Kind { kGeometric, kMixture };
  Kind kind = Kind::kGeometric;
  TargetModel g0;
  std::vector<double> schedule;
};

enum class RhoScheduleKind { kLinear, kPower };

/// rho_t = (t/T)^a with a = 1 for the linear schedule. Strictly increasing,
/// rho_T = 1.
std::vector<double> rho_schedule(int T, RhoScheduleKind kind, double power = 1.0);

/// Combines already-evaluated log g0(x) and log f(x) into log g_t(x).
double combine_bridge(BridgeSpec::Kind kind, double rho, double log_g0, double log_f);

/// Spec-level bridge evaluation: returns (log g_t(x), log f(x)). The second
/// value is computed anyway and callers recycle it.
std::pair<double, double> bridge_logdensity(const BridgeSpec& spec, TargetModel& target, int t,
                                            const Vector& x);

/// Output of a run. `samples` is the resampled, unweighted set S with the
/// p seed points already removed; `raw_log_weights` are every f/q log-weight
/// gathered before resampling (the evidence estimator consumes them).
struct SampleTrace {
  struct TraceCheckpoint {
    std::uint64_t eval_count = 0;
    // Unweighted running moments of the resampled set S (seeds excluded).
    Vector mean;
    Vector second_moment;
    double log_evidence = 0.0;
    // Self-normalized moments from the recycled f/q weight stream. For a
    // plain (untempered) run these are the pre-resampling IS estimates.
    Vector recycled_mean;
    Vector recycled_second_moment;
  };

  std::vector<Vector> samples;
  std::vector<double> raw_log_weights;
  std::vector<int> ancestry;  // resampled ancestor index per entry of samples
  std::vector<TraceCheckpoint> checkpoints;
  std::uint64_t final_eval_count = 0;
  std::int64_t iterations = 0;

  Vector final_mean() const;
  Vector final_variance() const;  // plug-in variance over S
};

/// Log of the arithmetic mean of exp(log-weights): the log-evidence
/// estimate log(1/N_w sum w_i), computed stably in log space.
double log_evidence(const std::vector<double>& raw_log_weights);

/// p independent draws from N(start, C0) to seed a run.
std::vector<Vector> gaussian_init(const Vector& start, const Matrix& C0, int population,
                                  RngStream& rng);

/// Gradient importance sampling targeting f at every iteration. Per
/// iteration: each of the p particles picks an ancestor uniformly from the
/// last p entries of S, proposes from the drifted adaptive Gaussian, and is
/// weighted f(x)/q_t(x | x'); the weighted batch is resampled into S and the
/// scale matrix updated from the resampled entries.
SampleTrace gris_run(TargetModel& target, const GrisConfig& cfg, const std::vector<Vector>& init,
                     RngStream& rng);

/// Tempered variant: propagation (resampling + adaptation) is driven by
/// g_t(x)/q_t weights while the f(x)/q_t stream is accumulated for posterior
/// and evidence estimation. With rho identically 1 this produces a trace
/// bit-identical to gris_run under the same seed.
SampleTrace tempered_gris_run(TargetModel& target, const BridgeSpec& bridge,
                              const GrisConfig& cfg, const std::vector<Vector>& init,
                              RngStream& rng);

}  // namespace gris
