#include <gris/baselines.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace gris {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMalaTargetAcceptance = 0.574;

bool bitwise_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

Matrix default_rw_cov(Eigen::Index d) {
  return (2.38 * 2.38 / static_cast<double>(d)) * Matrix::Identity(d, d);
}

Matrix default_c0(Eigen::Index d) {
  return (0.01 / static_cast<double>(d)) * Matrix::Identity(d, d);
}

/// Shared step/record/checkpoint loop of all chain runners. `step` must cost
/// exactly `step_cost` evaluations.
template <typename StepFn>
ChainTrace run_chain(TargetModel& target, MhChainState& state, std::uint64_t eval_budget,
                     std::uint64_t step_cost, std::uint64_t checkpoint_stride, StepFn step) {
  const Eigen::Index d = target.dim();
  ChainTrace trace;
  Vector sum = Vector::Zero(d);
  Vector sum2 = Vector::Zero(d);
  std::int64_t n = 0;
  std::uint64_t next_checkpoint = checkpoint_stride;

  auto record = [&](const Vector& x) {
    sum += x;
    sum2 += x.array().square().matrix();
    ++n;
    trace.samples.push_back(x);
    while (checkpoint_stride > 0 && target.eval_count() >= next_checkpoint) {
      ChainTrace::ChainCheckpoint cp;
      cp.eval_count = target.eval_count();
      cp.mean = sum / static_cast<double>(n);
      cp.second_moment = sum2 / static_cast<double>(n);
      trace.checkpoints.push_back(std::move(cp));
      next_checkpoint += checkpoint_stride;
    }
  };

  // The starting point is the first recorded sample (its evaluation is the
  // first charge against the budget).
  record(state.current);
  while (target.eval_count() + step_cost <= eval_budget) {
    step();
    record(state.current);
  }
  trace.final_eval_count = target.eval_count();
  trace.acceptance_rate = state.acceptance_rate();
  if (checkpoint_stride > 0 && (trace.checkpoints.empty() ||
                                trace.checkpoints.back().eval_count < trace.final_eval_count)) {
    ChainTrace::ChainCheckpoint cp;
    cp.eval_count = trace.final_eval_count;
    cp.mean = sum / static_cast<double>(n);
    cp.second_moment = sum2 / static_cast<double>(n);
    trace.checkpoints.push_back(std::move(cp));
  }
  return trace;
}

}  // namespace

double mh_accept_prob(double logf_cur, double logf_prop, double logq_fwd, double logq_rev) {
  if (logf_prop == kNegInf) return 0.0;
  const double log_ratio = logf_prop - logf_cur + logq_rev - logq_fwd;
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

bool mh_accept(double logf_cur, double logf_prop, double logq_fwd, double logq_rev,
               RngStream& rng) {
  const double u = rng.uniform();
  if (logf_prop == kNegInf) return false;
  const double log_ratio = logf_prop - logf_cur + logq_rev - logq_fwd;
  if (log_ratio >= 0.0) return true;
  return std::log(u) < log_ratio;
}

void am_step(MhChainState& state, AdaptState& adapt, TargetModel& target, RngStream& rng) {
  const ProposalParams params = ProposalParams::make(
      state.current, Vector::Zero(state.current.size()), adapt.factor());
  const Vector proposal = propose(params, rng);
  const double logf_prop = target.evaluate(proposal, false).log_density;
  // Symmetric kernel: the proposal densities cancel.
  if (mh_accept(state.current_logf, logf_prop, 0.0, 0.0, rng)) {
    state.current = proposal;
    state.current_logf = logf_prop;
    state.current_grad.reset();
    ++state.accepted;
  }
  ++state.steps;
  adapt.observe(state.current);
}

void malta_step(MhChainState& state, const Matrix& cov_factor, double delta,
                TargetModel& target, RngStream& rng) {
  if (!state.current_grad) {
    state.current_grad = target.evaluate(state.current, true).gradient;
  }
  const ProposalParams fwd =
      ProposalParams::make(state.current, delta * (*state.current_grad), cov_factor);
  const Vector proposal = propose(fwd, rng);
  const Evaluation prop_eval = target.evaluate(proposal, true);
  const double logq_fwd = proposal_logpdf(proposal, fwd);
  double logq_rev = kNegInf;
  if (std::isfinite(prop_eval.log_density)) {
    const ProposalParams rev =
        ProposalParams::make(proposal, delta * (*prop_eval.gradient), cov_factor);
    logq_rev = proposal_logpdf(state.current, rev);
  }
  if (mh_accept(state.current_logf, prop_eval.log_density, logq_fwd, logq_rev, rng)) {
    state.current = proposal;
    state.current_logf = prop_eval.log_density;
    state.current_grad = prop_eval.gradient;
    ++state.accepted;
  }
  ++state.steps;
}

Matrix frobenius_project(const Matrix& C, double A1) {
  if (A1 <= 0.0) throw ContractViolation("frobenius_project: A1 must be positive");
  const double norm = C.norm();
  if (norm <= A1) return C;
  return (A1 / norm) * C;
}

TmalaAdaptState::TmalaAdaptState(Matrix C0, std::int64_t t0, double s_d0, double eps, double A1,
                                 DriftConfig drift)
    : base_(std::move(C0), t0, /*s_d=*/1.0, eps),
      s_d_(s_d0),
      A1_(A1),
      drift_(drift) {
  if (s_d_ <= 0.0) throw ContractViolation("TmalaAdaptState: s_d0 must be positive");
  if (A1_ <= 0.0) throw ContractViolation("TmalaAdaptState: A1 must be positive");
  refresh();
}

void TmalaAdaptState::observe(const Vector& recorded_sample, double accept_prob) {
  base_.observe(recorded_sample);
  ++step_;
  // Robbins-Monro on the scale, targeting the MALA-optimal acceptance rate.
  const double gamma = std::pow(static_cast<double>(step_), -0.6);
  s_d_ += gamma * (accept_prob - kMalaTargetAcceptance);
  s_d_ = std::clamp(s_d_, 1e-4, A1_);
  refresh();
}

void TmalaAdaptState::refresh() {
  eff_cov_ = frobenius_project(s_d_ * base_.current_scale(), A1_);
  eff_factor_ = factorize(eff_cov_, 1e-10, "T-MALA scale matrix");
}

void tmala_step(MhChainState& state, TmalaAdaptState& tstate, TargetModel& target,
                RngStream& rng) {
  if (!state.current_grad) {
    state.current_grad = target.evaluate(state.current, true).gradient;
  }
  const Matrix& C = tstate.cov();
  const DriftConfig& dc = tstate.drift();
  const double cap = dc.cap_multiplier * std::sqrt(C.trace());

  auto capped_drift = [&](const Vector& grad) {
    Vector v = dc.delta * grad;
    const double norm = v.norm();
    if (cap > 0.0 && norm > cap) v *= cap / norm;
    return v;
  };

  const ProposalParams fwd = ProposalParams::make(
      state.current, 0.5 * (C * capped_drift(*state.current_grad)), tstate.factor());
  const Vector proposal = propose(fwd, rng);
  const Evaluation prop_eval = target.evaluate(proposal, true);
  const double logq_fwd = proposal_logpdf(proposal, fwd);
  double logq_rev = kNegInf;
  if (std::isfinite(prop_eval.log_density)) {
    const ProposalParams rev = ProposalParams::make(
        proposal, 0.5 * (C * capped_drift(*prop_eval.gradient)), tstate.factor());
    logq_rev = proposal_logpdf(state.current, rev);
  }
  const double accept_prob =
      mh_accept_prob(state.current_logf, prop_eval.log_density, logq_fwd, logq_rev);
  if (mh_accept(state.current_logf, prop_eval.log_density, logq_fwd, logq_rev, rng)) {
    state.current = proposal;
    state.current_logf = prop_eval.log_density;
    state.current_grad = prop_eval.gradient;
    ++state.accepted;
  }
  ++state.steps;
  tstate.observe(state.current, accept_prob);
}

LeapfrogResult leapfrog(const Vector& position, const Vector& momentum, const GradFn& grad_log_f,
                        double step_size, int n_steps, const Vector& mass_diag) {
  if (n_steps < 0) throw ContractViolation("leapfrog: n_steps must be >= 0");
  LeapfrogResult out{position, momentum, false};
  if (n_steps == 0) return out;

  const Vector inv_mass = mass_diag.size() > 0
                              ? Vector(mass_diag.array().inverse())
                              : Vector(Vector::Ones(position.size()));

  auto kick = [&](double scale) {
    const Vector g = grad_log_f(out.position);
    if (!g.allFinite()) {
      out.diverged = true;
      return;
    }
    out.momentum += scale * step_size * g;
  };

  kick(0.5);
  for (int i = 0; i < n_steps && !out.diverged; ++i) {
    out.position += step_size * (inv_mass.array() * out.momentum.array()).matrix();
    if (!out.position.allFinite()) {
      out.diverged = true;
      break;
    }
    kick(i + 1 < n_steps ? 1.0 : 0.5);
  }
  return out;
}

void hmc_step(MhChainState& state, const HmcConfig& cfg, TargetModel& target, RngStream& rng) {
  if (cfg.step_size <= 0.0) throw ContractViolation("hmc_step: step_size must be positive");
  if (cfg.n_leapfrog < 1) throw ContractViolation("hmc_step: n_leapfrog must be >= 1");
  const Eigen::Index d = target.dim();
  const Vector mass = cfg.mass_diag.size() > 0 ? cfg.mass_diag : Vector(Vector::Ones(d));
  const Vector inv_mass = mass.array().inverse();

  if (!state.current_grad) {
    state.current_grad = target.evaluate(state.current, true).gradient;
  }

  Vector momentum(d);
  for (Eigen::Index i = 0; i < d; ++i) momentum[i] = std::sqrt(mass[i]) * rng.normal();

  // Serve the gradient of the current point from the chain state; every other
  // position is a fresh counted evaluation.
  GradFn grad = [&](const Vector& x) -> Vector {
    if (bitwise_equal(x, state.current)) return *state.current_grad;
    return *target.evaluate(x, true).gradient;
  };

  const LeapfrogResult traj =
      leapfrog(state.current, momentum, grad, cfg.step_size, cfg.n_leapfrog, mass);

  const double h_cur =
      -state.current_logf + 0.5 * (momentum.array().square() * inv_mass.array()).sum();
  double log_accept = kNegInf;
  double logf_prop = kNegInf;
  if (!traj.diverged) {
    logf_prop = target.evaluate(traj.position, false).log_density;
    const double h_prop =
        -logf_prop + 0.5 * (traj.momentum.array().square() * inv_mass.array()).sum();
    log_accept = -(h_prop - h_cur);
  }

  const double u = rng.uniform();
  if (log_accept >= 0.0 || std::log(u) < log_accept) {
    state.current = traj.position;
    state.current_logf = logf_prop;
    state.current_grad = target.evaluate(traj.position, true).gradient;
    ++state.accepted;
  }
  ++state.steps;
}

ChainTrace run_am(TargetModel& target, const AmConfig& cfg, const Vector& x0,
                  std::uint64_t eval_budget, std::uint64_t checkpoint_stride, RngStream& rng) {
  const Eigen::Index d = target.dim();
  MhChainState state;
  state.current = x0;
  state.current_logf = target.evaluate(x0, false).log_density;

  AdaptState adapt(cfg.C0.size() > 0 ? cfg.C0 : default_c0(d),
                   cfg.t0 >= 0 ? cfg.t0 : 2 * d,
                   cfg.s_d > 0.0 ? cfg.s_d : 2.38 * 2.38 / static_cast<double>(d), cfg.eps,
                   cfg.adapt_batch);
  adapt.observe(state.current);

  return run_chain(target, state, eval_budget, 1, checkpoint_stride,
                   [&] { am_step(state, adapt, target, rng); });
}

ChainTrace run_malta(TargetModel& target, const MaltaConfig& cfg, const Vector& x0,
                     std::uint64_t eval_budget, std::uint64_t checkpoint_stride, RngStream& rng) {
  const Eigen::Index d = target.dim();
  MhChainState state;
  state.current = x0;
  const Evaluation ev = target.evaluate(x0, true);
  state.current_logf = ev.log_density;
  state.current_grad = ev.gradient;

  const Matrix factor =
      factorize(cfg.cov.size() > 0 ? cfg.cov : default_rw_cov(d), 1e-10, "MALTA covariance");
  return run_chain(target, state, eval_budget, 1, checkpoint_stride,
                   [&] { malta_step(state, factor, cfg.delta, target, rng); });
}

ChainTrace run_tmala(TargetModel& target, const TmalaConfig& cfg, const Vector& x0,
                     std::uint64_t eval_budget, std::uint64_t checkpoint_stride, RngStream& rng) {
  const Eigen::Index d = target.dim();
  MhChainState state;
  state.current = x0;
  const Evaluation ev = target.evaluate(x0, true);
  state.current_logf = ev.log_density;
  state.current_grad = ev.gradient;

  DriftConfig drift;
  drift.delta = cfg.delta;
  drift.decay_exponent = 0.0;  // constant drift scale; decay is GRIS-specific
  drift.cap_multiplier = cfg.drift_cap_multiplier;
  TmalaAdaptState tstate(cfg.C0.size() > 0 ? cfg.C0 : default_c0(d),
                         cfg.t0 >= 0 ? cfg.t0 : 2 * d,
                         cfg.s_d0 > 0.0 ? cfg.s_d0 : 2.38 * 2.38 / static_cast<double>(d),
                         cfg.eps, cfg.A1, drift);
  tstate.observe(state.current, kMalaTargetAcceptance);  // seed sample, neutral for RM

  return run_chain(target, state, eval_budget, 1, checkpoint_stride,
                   [&] { tmala_step(state, tstate, target, rng); });
}

ChainTrace run_hmc(TargetModel& target, const HmcConfig& cfg, const Vector& x0,
                   std::uint64_t eval_budget, std::uint64_t checkpoint_stride, RngStream& rng) {
  MhChainState state;
  state.current = x0;
  const Evaluation ev = target.evaluate(x0, true);
  state.current_logf = ev.log_density;
  state.current_grad = ev.gradient;

  return run_chain(target, state, eval_budget, static_cast<std::uint64_t>(cfg.n_leapfrog),
                   checkpoint_stride, [&] { hmc_step(state, cfg, target, rng); });
}

}  // namespace gris
