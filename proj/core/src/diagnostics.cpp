#include <gris/diagnostics.hpp>

#include <gris/resample.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gris {

double ess_is(const Vector& log_weights) {
  const Vector w = normalize_log_weights(log_weights);
  return 1.0 / w.squaredNorm();
}

double autocorr_at_lag(const Vector& series, const ScalarTruth& truth, Eigen::Index lag) {
  const Eigen::Index n = series.size();
  if (lag < 1 || lag > n - 1) {
    throw ContractViolation("autocorr_at_lag: lag must be in [1, N-1]");
  }
  if (truth.variance <= 0.0) {
    throw ContractViolation("autocorr_at_lag: ground-truth variance must be positive");
  }
  double acc = 0.0;
  for (Eigen::Index j = lag; j < n; ++j) {
    acc += (series[j] - truth.mean) * (series[j - lag] - truth.mean);
  }
  return acc / (truth.variance * static_cast<double>(n - lag));
}

EssMcResult ess_mc(const Vector& series, const ScalarTruth& truth) {
  constexpr double kCutoff = 0.05;
  const Eigen::Index n = series.size();
  if (n == 0) throw ContractViolation("ess_mc: empty series");
  EssMcResult result;
  if (n == 1) {
    result.ess = 1.0;
    return result;
  }
  double weighted_sum = 0.0;
  bool cut = false;
  for (Eigen::Index lag = 1; lag <= n - 1; ++lag) {
    const double rho = autocorr_at_lag(series, truth, lag);
    if (rho < kCutoff) {
      cut = true;
      break;
    }
    weighted_sum += (1.0 - static_cast<double>(lag) / static_cast<double>(n)) * rho;
  }
  result.truncation_warning = !cut;
  const double raw = static_cast<double>(n) / (1.0 + 2.0 * weighted_sum);
  result.ess = raw;
  if (raw > static_cast<double>(n)) {
    result.ess = static_cast<double>(n);
    result.clamped = true;
  }
  return result;
}

EssMcResult ess_mc_min(const std::vector<Vector>& chain, const GroundTruth& truth) {
  if (chain.empty()) throw ContractViolation("ess_mc_min: empty chain");
  const Eigen::Index d = chain.front().size();
  if (truth.mean.size() != d || truth.variance.size() != d) {
    throw ContractViolation("ess_mc_min: ground truth dimension mismatch");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(chain.size());
  EssMcResult best;
  best.ess = std::numeric_limits<double>::infinity();
  Vector series(n);
  for (Eigen::Index dim = 0; dim < d; ++dim) {
    for (int which = 0; which < 2; ++which) {
      ScalarTruth scalar;
      if (which == 0) {
        for (Eigen::Index j = 0; j < n; ++j) series[j] = chain[static_cast<std::size_t>(j)][dim];
        scalar = {truth.mean[dim], truth.variance[dim]};
      } else {
        for (Eigen::Index j = 0; j < n; ++j) {
          const double dev = chain[static_cast<std::size_t>(j)][dim] - truth.mean[dim];
          series[j] = dev * dev;
        }
        scalar = {truth.variance[dim], 2.0 * truth.variance[dim] * truth.variance[dim]};
      }
      const EssMcResult r = ess_mc(series, scalar);
      if (r.ess < best.ess) best = r;
    }
  }
  return best;
}

double max_se(const Vector& est_mean, const Vector& est_var, const GroundTruth& truth) {
  const Eigen::Index d = truth.mean.size();
  check_dim(est_mean, d, "max_se(est_mean)");
  check_dim(est_var, d, "max_se(est_var)");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double em = est_mean[i] - truth.mean[i];
    const double ev = est_var[i] - truth.variance[i];
    worst = std::max({worst, em * em, ev * ev});
  }
  return worst;
}

namespace {

AggregateCurve aggregate_one(const std::vector<RunSummary>& runs, const Vector& truth_value,
                             bool use_mean_estimate) {
  const std::size_t n_runs = runs.size();
  const std::size_t n_cp = runs.front().checkpoints.size();
  const Eigen::Index d = truth_value.size();
  AggregateCurve curve;
  curve.bias2.resize(static_cast<Eigen::Index>(n_cp), d);
  curve.variance.resize(static_cast<Eigen::Index>(n_cp), d);
  curve.mse.resize(static_cast<Eigen::Index>(n_cp), d);

  const double R = static_cast<double>(n_runs);
  for (std::size_t cp = 0; cp < n_cp; ++cp) {
    for (Eigen::Index dim = 0; dim < d; ++dim) {
      double sum = 0.0, sum_sq_err = 0.0;
      for (const RunSummary& run : runs) {
        const Checkpoint& c = run.checkpoints[cp];
        const double est = use_mean_estimate ? c.mean[dim] : c.variance[dim];
        sum += est;
        const double err = est - truth_value[dim];
        sum_sq_err += err * err;
      }
      const double avg = sum / R;
      double var = 0.0;
      if (n_runs > 1) {
        for (const RunSummary& run : runs) {
          const Checkpoint& c = run.checkpoints[cp];
          const double est = use_mean_estimate ? c.mean[dim] : c.variance[dim];
          var += (est - avg) * (est - avg);
        }
        var /= (R - 1.0);
      }
      const double bias = avg - truth_value[dim];
      curve.bias2(static_cast<Eigen::Index>(cp), dim) = bias * bias;
      curve.variance(static_cast<Eigen::Index>(cp), dim) = var;
      curve.mse(static_cast<Eigen::Index>(cp), dim) = sum_sq_err / R;
    }
  }
  curve.pooled_bias2 = curve.bias2.rowwise().mean();
  curve.pooled_variance = curve.variance.rowwise().mean();
  curve.pooled_mse = curve.mse.rowwise().mean();
  return curve;
}

}  // namespace

AggregateCurves aggregate_runs(const std::vector<RunSummary>& runs, const GroundTruth& truth) {
  if (runs.size() < 2) throw ContractViolation("aggregate_runs: need at least 2 runs");
  const std::size_t n_cp = runs.front().checkpoints.size();
  for (const RunSummary& run : runs) {
    if (run.checkpoints.size() != n_cp) {
      throw ContractViolation("aggregate_runs: runs have different checkpoint counts");
    }
    for (std::size_t cp = 0; cp < n_cp; ++cp) {
      if (run.checkpoints[cp].eval_count != runs.front().checkpoints[cp].eval_count) {
        throw ContractViolation("aggregate_runs: misaligned checkpoint eval counts");
      }
    }
  }

  AggregateCurves out;
  out.eval_counts.reserve(n_cp);
  for (const Checkpoint& c : runs.front().checkpoints) out.eval_counts.push_back(c.eval_count);
  out.mean_estimate = aggregate_one(runs, truth.mean, /*use_mean_estimate=*/true);
  out.var_estimate = aggregate_one(runs, truth.variance, /*use_mean_estimate=*/false);

  const bool all_have_evidence = std::all_of(runs.begin(), runs.end(), [&](const RunSummary& r) {
    return std::all_of(r.checkpoints.begin(), r.checkpoints.end(),
                       [](const Checkpoint& c) { return c.log_evidence.has_value(); });
  });
  if (all_have_evidence && truth.log_evidence) {
    Vector ev(static_cast<Eigen::Index>(n_cp));
    for (std::size_t cp = 0; cp < n_cp; ++cp) {
      double acc = 0.0;
      for (const RunSummary& run : runs) {
        const double err = *run.checkpoints[cp].log_evidence - *truth.log_evidence;
        acc += err * err;
      }
      ev[static_cast<Eigen::Index>(cp)] = acc / static_cast<double>(runs.size());
    }
    out.evidence_mse = std::move(ev);
  }
  return out;
}

}  // namespace gris
