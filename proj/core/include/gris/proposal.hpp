#pragma once

#include <gris/rng.hpp>
#include <gris/types.hpp>

#include <cstdint>

namespace gris {

/// Tuning of the gradient drift D(t, g) = (delta / t^decay) g.
///
/// The decay exponent defaults to 1.5; it is exposed because nothing else in
/// the sampler depends on that particular value. `cap_multiplier` bounds the
/// drift norm at cap_multiplier * sqrt(trace(C_t)) before it enters a proposal
/// mean; raw Langevin drifts blow up in the tails of banana-like targets.
struct DriftConfig {
  double delta = 0.0;
  double decay_exponent = 1.5;
  double cap_multiplier = 10.0;
};

/// Drift vector (delta / t^decay) * grad, uncapped.
Vector drift(std::int64_t t, const Vector& grad, const DriftConfig& cfg);

/// A frozen Gaussian proposal N(origin + drift_vec, L L^T). Immutable once
/// built; safe to share read-only across workers.
struct ProposalParams {
  Vector origin;
  Vector drift_vec;
  Matrix factor;        // lower-triangular L
  double log_det_half;  // sum of log L_ii = 0.5 log det(C)

  Vector mean() const { return origin + drift_vec; }

  static ProposalParams make(Vector origin, Vector drift_vec, Matrix factor);
};

/// Builds the proposal q_t(. | origin) = N(origin + D(t, grad), L L^T),
/// applying the drift-norm cap from `cfg`.
ProposalParams make_drifted_proposal(const Vector& origin, const Vector& grad_at_origin,
                                     std::int64_t t, const DriftConfig& cfg,
                                     const Matrix& factor);

/// Draws origin + drift + L z with z iid standard normal.
Vector propose(const ProposalParams& params, RngStream& rng);

/// Exact multivariate normal log-density of x under the proposal.
double proposal_logpdf(const Vector& x, const ProposalParams& params);

}  // namespace gris
