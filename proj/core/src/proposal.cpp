#include <gris/proposal.hpp>

#include <cmath>
#include <numbers>

namespace gris {

Vector drift(std::int64_t t, const Vector& grad, const DriftConfig& cfg) {
  if (t < 1) throw ContractViolation("drift: t must be >= 1");
  if (cfg.delta < 0.0) throw ContractViolation("drift: delta must be >= 0");
  if (cfg.delta == 0.0) return Vector::Zero(grad.size());
  return (cfg.delta / std::pow(static_cast<double>(t), cfg.decay_exponent)) * grad;
}

ProposalParams ProposalParams::make(Vector origin, Vector drift_vec, Matrix factor) {
  if (factor.rows() != factor.cols() || factor.rows() != origin.size() ||
      drift_vec.size() != origin.size()) {
    throw ContractViolation("ProposalParams: inconsistent dimensions");
  }
  ProposalParams p{std::move(origin), std::move(drift_vec), std::move(factor), 0.0};
  p.log_det_half = p.factor.diagonal().array().log().sum();
  if (!std::isfinite(p.log_det_half)) {
    throw NumericalError("ProposalParams: factor has non-positive diagonal");
  }
  return p;
}

ProposalParams make_drifted_proposal(const Vector& origin, const Vector& grad_at_origin,
                                     std::int64_t t, const DriftConfig& cfg,
                                     const Matrix& factor) {
  Vector d = drift(t, grad_at_origin, cfg);
  const double cap = cfg.cap_multiplier * factor.norm();  // |L|_F = sqrt(trace(LL^T))
  const double norm = d.norm();
  if (cap > 0.0 && norm > cap) d *= cap / norm;
  return ProposalParams::make(origin, std::move(d), factor);
}

Vector propose(const ProposalParams& params, RngStream& rng) {
  const Vector z = rng.normal_vector(params.origin.size());
  return params.origin + params.drift_vec +
         params.factor.triangularView<Eigen::Lower>() * z;
}

double proposal_logpdf(const Vector& x, const ProposalParams& params) {
  check_dim(x, params.origin.size(), "proposal_logpdf");
  const Eigen::Index d = x.size();
  const Vector centered = x - params.origin - params.drift_vec;
  const Vector y = params.factor.triangularView<Eigen::Lower>().solve(centered);
  return -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) -
         params.log_det_half - 0.5 * y.squaredNorm();
}

}  // namespace gris
