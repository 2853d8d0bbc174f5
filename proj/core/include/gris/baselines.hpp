#pragma once

#include <gris/adapt.hpp>
#include <gris/proposal.hpp>
#include <gris/rng.hpp>
#include <gris/target.hpp>
#include <gris/types.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace gris {

/// State of one Metropolis-Hastings chain. The gradient of the current point
/// is kept so gradient-based kernels never pay to re-evaluate it after a
/// rejection.
struct MhChainState {
  Vector current;
  double current_logf = 0.0;
  std::optional<Vector> current_grad;
  std::int64_t accepted = 0;
  std::int64_t steps = 0;

  double acceptance_rate() const {
    return steps > 0 ? static_cast<double>(accepted) / static_cast<double>(steps) : 0.0;
  }
};

/// Standard MH acceptance: accept with probability
/// min(1, exp(logf_prop - logf_cur + logq_rev - logq_fwd)).
/// One uniform is always consumed so streams stay aligned across decisions.
bool mh_accept(double logf_cur, double logf_prop, double logq_fwd, double logq_rev,
               RngStream& rng);

/// The acceptance probability itself (used by Robbins-Monro tuning).
double mh_accept_prob(double logf_cur, double logf_prop, double logq_fwd, double logq_rev);

/// Adaptive Metropolis step: symmetric proposal N(current, C_t), MH-corrected;
/// the recorded sample (new or repeated current) feeds the adaptation.
void am_step(MhChainState& state, AdaptState& adapt, TargetModel& target, RngStream& rng);

/// Langevin step with constant drift scale and fixed covariance: proposal
/// N(current + delta * grad log f(current), C). The reverse density uses the
/// gradient at the proposed point.
void malta_step(MhChainState& state, const Matrix& cov_factor, double delta,
                TargetModel& target, RngStream& rng);

/// Scale-matrix projection onto the Frobenius ball of radius A1: C unchanged
/// if |C|_F <= A1, else rescaled to norm exactly A1.
Matrix frobenius_project(const Matrix& C, double A1);

/// Adaptive truncated-drift MALA state: the effective proposal covariance is
/// s_d * (sample covariance + eps I) projected to |C|_F <= A1, with s_d tuned
/// toward the 0.574 MALA-optimal acceptance rate by Robbins-Monro.
class TmalaAdaptState {
 public:
  TmalaAdaptState(Matrix C0, std::int64_t t0, double s_d0, double eps, double A1,
                  DriftConfig drift);

  void observe(const Vector& recorded_sample, double accept_prob);

  const Matrix& cov() const { return eff_cov_; }
  const Matrix& factor() const { return eff_factor_; }
  double s_d() const { return s_d_; }
  double A1() const { return A1_; }
  const DriftConfig& drift() const { return drift_; }
  const AdaptState& base() const { return base_; }

 private:
  void refresh();

  AdaptState base_;  // tracks cov + eps I with unit s_d
  double s_d_;
  double A1_;
  DriftConfig drift_;
  std::int64_t step_ = 0;
  Matrix eff_cov_;
  Matrix eff_factor_;
};

/// One adaptive T-MALA step: proposal N(current + (C_t/2) D(current), C_t)
/// with D the norm-capped drift delta * grad log f; adaptation and projection
/// happen after the step.
void tmala_step(MhChainState& state, TmalaAdaptState& tstate, TargetModel& target,
                RngStream& rng);

struct HmcConfig {
  double step_size = 0.1;
  int n_leapfrog = 10;
  Vector mass_diag;  // empty = identity
};

using GradFn = std::function<Vector(const Vector&)>;

struct LeapfrogResult {
  Vector position;
  Vector momentum;
  bool diverged = false;
};

/// Velocity-Verlet integrator for the Hamiltonian -log f(x) + |p|_M^2 / 2:
/// half momentum kick, n alternating position/momentum updates, final half
/// kick. n_steps = 0 returns the input unchanged. A non-finite gradient or
/// position sets the divergence flag.
LeapfrogResult leapfrog(const Vector& position, const Vector& momentum, const GradFn& grad_log_f,
                        double step_size, int n_steps, const Vector& mass_diag = Vector());

/// One HMC step: momentum refresh, leapfrog, accept with min(1, exp(-dH)).
/// Divergent trajectories are rejected outright.
void hmc_step(MhChainState& state, const HmcConfig& cfg, TargetModel& target, RngStream& rng);

/// A chain run under an evaluation budget, recording one sample per step.
struct ChainTrace {
  std::vector<Vector> samples;
  struct ChainCheckpoint {
    std::uint64_t eval_count = 0;
    Vector mean;
    Vector second_moment;
  };
  std::vector<ChainCheckpoint> checkpoints;
  std::uint64_t final_eval_count = 0;
  double acceptance_rate = 0.0;
};

struct AmConfig {
  std::int64_t t0 = -1;  // negative = 2 d
  Matrix C0;             // empty = (0.1^2 / d) I
  double s_d = -1.0;     // negative = 2.38^2 / d
  double eps = 1e-6;
  int adapt_batch = 1;
};

struct MaltaConfig {
  double delta = 0.5;
  Matrix cov;  // empty = (2.38^2 / d) I
};

struct TmalaConfig {
  double delta = 0.5;
  std::int64_t t0 = -1;
  Matrix C0;
  double s_d0 = -1.0;
  double eps = 1e-6;
  double A1 = 1000.0;
  double drift_cap_multiplier = 10.0;
};

ChainTrace run_am(TargetModel& target, const AmConfig& cfg, const Vector& x0,
                  std::uint64_t eval_budget, std::uint64_t checkpoint_stride, RngStream& rng);
ChainTrace run_malta(TargetModel& target, const MaltaConfig& cfg, const Vector& x0,
                     std::uint64_t eval_budget, std::uint64_t checkpoint_stride, RngStream& rng);
ChainTrace run_tmala(TargetModel& target, const TmalaConfig& cfg, const Vector& x0,
                     std::uint64_t eval_budget, std::uint64_t checkpoint_stride, RngStream& rng);
ChainTrace run_hmc(TargetModel& target, const HmcConfig& cfg, const Vector& x0,
                   std::uint64_t eval_budget, std::uint64_t checkpoint_stride, RngStream& rng);

}  // namespace gris
