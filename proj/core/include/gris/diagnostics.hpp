#pragma once

#include <gris/types.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gris {

/// Reference moments an evaluation run is scored against.
struct GroundTruth {
  Vector mean;
  Vector variance;
  std::string source;  // "analytic" or "defensive_is"
  std::optional<double> log_evidence;
  std::optional<double> ess;  // ESS of the defensive-IS estimate, when that is the source
};

/// One recorded state of a run: estimates as of `eval_count` evaluations.
struct Checkpoint {
  std::uint64_t eval_count = 0;
  Vector mean;
  Vector variance;
  std::optional<double> log_evidence;
};

/// Per-run record consumed by aggregation and reporting.
struct RunSummary {
  std::vector<Checkpoint> checkpoints;
  Vector se_mean;  // final squared error of the mean estimate, per dimension
  Vector se_var;   // final squared error of the variance estimate, per dimension
  double max_se = 0.0;
  std::optional<double> ess_is;  // never set for SMC-style traces
  std::optional<double> ess_mc;
};

/// Importance-sampling effective sample size 1 / sum(w_hat_i^2).
/// Equals N for equal weights and 1 for a one-hot weight vector.
double ess_is(const Vector& log_weights);

/// Ground-truth mean/variance of a scalar function of the target.
struct ScalarTruth {
  double mean = 0.0;
  double variance = 1.0;
};

/// Autocorrelation estimate at lag i that plugs in the ground-truth mean and
/// variance rather than sample moments:
///   rho_i = 1 / (V (N - i)) sum_{j=i+1}^N (h_j - E)(h_{j-i} - E).
double autocorr_at_lag(const Vector& series, const ScalarTruth& truth, Eigen::Index lag);

struct EssMcResult {
  double ess = 0.0;
  bool truncation_warning = false;  // no lag fell below the 0.05 cutoff
  bool clamped = false;             // raw estimate exceeded N
};

/// MCMC effective sample size N / (1 + 2 sum (1 - i/N) rho_i), truncated at
/// the first lag whose autocorrelation estimate drops below 0.05 (that lag
/// itself excluded; an i.i.d. series therefore scores exactly N).
EssMcResult ess_mc(const Vector& series, const ScalarTruth& truth);

/// Minimum ESS over dimensions and over the two functions of interest
/// (coordinate and squared deviation from the true mean). The variance proxy
/// for the squared-deviation function uses the Gaussian fourth moment,
/// V[(X - mu)^2] = 2 sigma^4.
EssMcResult ess_mc_min(const std::vector<Vector>& chain, const GroundTruth& truth);

/// Worst squared error across mean and variance estimates and across
/// dimensions.
double max_se(const Vector& est_mean, const Vector& est_var, const GroundTruth& truth);

/// Cross-run curves for one estimand. Rows index checkpoints, columns
/// dimensions; `pooled_*` average across dimensions.
struct AggregateCurve {
  Matrix bias2;
  Matrix variance;  // unbiased across-run sample variance
  Matrix mse;       // satisfies mse = bias2 + (R-1)/R * variance
  Vector pooled_bias2;
  Vector pooled_variance;
  Vector pooled_mse;
};

struct AggregateCurves {
  std::vector<std::uint64_t> eval_counts;
  AggregateCurve mean_estimate;
  AggregateCurve var_estimate;
  std::optional<Vector> evidence_mse;  // present when all runs carry evidence
                                       // and the truth pins log Z
};

/// Squared bias, across-run variance and MSE per checkpoint. All runs must
/// share the same checkpoint eval-counts.
AggregateCurves aggregate_runs(const std::vector<RunSummary>& runs, const GroundTruth& truth);

}  // namespace gris
