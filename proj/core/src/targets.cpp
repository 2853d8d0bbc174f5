#include <gris/targets.hpp>

#include <gris/adapt.hpp>
#include <gris/proposal.hpp>
#include <gris/resample.hpp>

#include <Eigen/Cholesky>

#include <algorithm>

#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

namespace gris {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double logsumexp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

/// Per-component machinery for Gaussian and t mixtures: the Cholesky factor,
/// the half log-determinant, and whitening solves.
struct ComponentGeometry {
  Matrix factor;
  double log_det_half;

  explicit ComponentGeometry(const Matrix& cov)
      : factor(factorize(cov, 1e-12, "mixture component covariance")),
        log_det_half(factor.diagonal().array().log().sum()) {}

  Vector whiten(const Vector& centered) const {
    return factor.triangularView<Eigen::Lower>().solve(centered);
  }

  /// Sigma^{-1} v via two triangular solves.
  Vector solve(const Vector& centered) const {
    Vector y = factor.triangularView<Eigen::Lower>().solve(centered);
    return factor.transpose().triangularView<Eigen::Upper>().solve(y);
  }
};

}  // namespace

AnalyticTarget gaussian_grid(const GaussianGridSpec& spec) {
  if (spec.grid_side < 1) throw ContractViolation("gaussian_grid: grid_side must be >= 1");
  if (spec.weight_decay <= 0.0) {
    throw ContractViolation("gaussian_grid: weight_decay must be positive");
  }
  const int k = spec.grid_side * spec.grid_side;
  const Matrix comp_cov =
      spec.component_cov.size() == 0 ? Matrix::Identity(2, 2) : spec.component_cov;

  std::vector<Vector> means;
  means.reserve(static_cast<std::size_t>(k));
  Vector log_weights(k);
  const double half = (spec.grid_side - 1) / 2.0;
  int idx = 0;
  for (int i = 0; i < spec.grid_side; ++i) {
    for (int j = 0; j < spec.grid_side; ++j) {
      Vector mu(2);
      mu << spec.spacing * (i - half), spec.spacing * (j - half);
      log_weights[idx] = -mu.norm() / spec.weight_decay;
      means.push_back(std::move(mu));
      ++idx;
    }
  }
  log_weights.array() -= logsumexp(log_weights);

  auto geom = std::make_shared<ComponentGeometry>(comp_cov);
  auto means_ptr = std::make_shared<std::vector<Vector>>(std::move(means));
  auto lw = std::make_shared<Vector>(log_weights);

  JointDensityFn joint = [geom, means_ptr, lw](const Vector& x, bool need_grad) {
    const int n = static_cast<int>(means_ptr->size());
    Vector comp_logp(n);
    for (int c = 0; c < n; ++c) {
      const Vector centered = x - (*means_ptr)[static_cast<std::size_t>(c)];
      comp_logp[c] = (*lw)[c] - kLog2Pi - geom->log_det_half -
                     0.5 * geom->whiten(centered).squaredNorm();
    }
    Evaluation out;
    out.log_density = logsumexp(comp_logp);
    if (need_grad) {
      Vector grad = Vector::Zero(2);
      for (int c = 0; c < n; ++c) {
        const double resp = std::exp(comp_logp[c] - out.log_density);
        grad -= resp * geom->solve(x - (*means_ptr)[static_cast<std::size_t>(c)]);
      }
      out.gradient = std::move(grad);
    }
    return out;
  };

  // Moments of the mixture: E = sum w_k mu_k, V = sum w_k (S_k + mu mu^T) - EE^T.
  Vector w = log_weights.array().exp();
  Vector mean = Vector::Zero(2);
  for (int c = 0; c < k; ++c) mean += w[c] * (*means_ptr)[static_cast<std::size_t>(c)];
  Matrix cov = Matrix::Zero(2, 2);
  for (int c = 0; c < k; ++c) {
    const Vector& mu = (*means_ptr)[static_cast<std::size_t>(c)];
    cov += w[c] * (comp_cov + mu * mu.transpose());
  }
  cov -= mean * mean.transpose();

  return AnalyticTarget{TargetModel(2, std::move(joint)), std::move(mean), std::move(cov), 0.0};
}

AnalyticTarget gaussian_target(const Vector& mean, const Matrix& cov, double log_scale) {
  const Eigen::Index d = mean.size();
  auto geom = std::make_shared<ComponentGeometry>(cov);
  const double norm_const =
      -0.5 * static_cast<double>(d) * kLog2Pi - geom->log_det_half + log_scale;
  Vector mu = mean;
  JointDensityFn joint = [geom, mu, norm_const, d](const Vector& x, bool need_grad) {
    Evaluation out;
    const Vector centered = x - mu;
    const Vector solved = geom->solve(centered);
    out.log_density = norm_const - 0.5 * centered.dot(solved);
    if (need_grad) out.gradient = -solved;
    return out;
  };
  return AnalyticTarget{TargetModel(static_cast<int>(d), std::move(joint)), mean, cov, log_scale};
}

AnalyticTarget banana(const BananaSpec& spec) {
  if (spec.s <= 0.0) throw ContractViolation("banana: s must be positive");
  const double b = spec.b;
  const double s = spec.s;

  JointDensityFn joint = [b, s](const Vector& x, bool need_grad) {
    const double u = x[1] - b * (x[0] * x[0] - s);
    Evaluation out;
    out.log_density = -x[0] * x[0] / (2.0 * s) - 0.5 * u * u;
    if (need_grad) {
      Vector grad(2);
      grad[0] = -x[0] / s + 2.0 * b * x[0] * u;
      grad[1] = -u;
      out.gradient = std::move(grad);
    }
    return out;
  };

  Vector mean = Vector::Zero(2);
  Matrix cov(2, 2);
  // x1 ~ N(0, s); x2 = b(x1^2 - s) + N(0,1), so Var(x2) = 1 + b^2 Var(x1^2)
  // = 1 + 2 b^2 s^2 and Cov(x1, x2) = b E[x1^3] = 0.
  cov << s, 0.0, 0.0, 1.0 + 2.0 * b * b * s * s;
  // Unnormalized: integral is sqrt(2 pi s) * sqrt(2 pi).
  const double log_z = kLog2Pi + 0.5 * std::log(s);
  return AnalyticTarget{TargetModel(2, std::move(joint)), std::move(mean), std::move(cov), log_z};
}

AnalyticTarget t_mixture(const TMixtureSpec& spec) {
  if (spec.dof <= 2.0) throw ContractViolation("t_mixture: dof must exceed 2");
  if (spec.n_components < 1) throw ContractViolation("t_mixture: need >= 1 component");
  const int d = spec.dim;
  const int k = spec.n_components;
  const double nu = spec.dof;

  Vector weights = spec.weights;
  if (weights.size() == 0) {
    weights.resize(3);
    weights << 0.5, 0.3, 0.2;
  }
  if (weights.size() != k) throw ContractViolation("t_mixture: weights/components mismatch");
  if ((weights.array() <= 0.0).any()) throw ContractViolation("t_mixture: weights must be > 0");
  weights /= weights.sum();

  std::vector<Vector> means = spec.means;
  std::vector<Matrix> scales = spec.scales;
  if (means.empty() != scales.empty()) {
    throw ContractViolation("t_mixture: supply both means and scales or neither");
  }
  if (means.empty()) {
    // Pinned generation recipe: means uniform on the box, scales S = W^{-1}
    // with W ~ Wishart(I, nu) drawn by Bartlett decomposition.
    RngStream gen(spec.gen_seed, 0);
    const int wishart_dof = static_cast<int>(nu);
    for (int c = 0; c < k; ++c) {
      Vector mu(d);
      for (int i = 0; i < d; ++i) mu[i] = spec.mean_box * (2.0 * gen.uniform() - 1.0);
      Matrix A = Matrix::Zero(d, d);
      for (int i = 0; i < d; ++i) {
        A(i, i) = std::sqrt(gen.chi_squared(wishart_dof - i));
        for (int j = 0; j < i; ++j) A(i, j) = gen.normal();
      }
      const Matrix W = A * A.transpose();
      Matrix S = W.llt().solve(Matrix::Identity(d, d));
      S = 0.5 * (S + S.transpose());
      means.push_back(std::move(mu));
      scales.push_back(std::move(S));
    }
  }
  if (static_cast<int>(means.size()) != k || static_cast<int>(scales.size()) != k) {
    throw ContractViolation("t_mixture: means/scales count must match n_components");
  }
  std::vector<ComponentGeometry> geoms;
  geoms.reserve(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    check_dim(means[static_cast<std::size_t>(c)], d, "t_mixture mean");
    geoms.emplace_back(scales[static_cast<std::size_t>(c)]);
  }

  // log Gamma((nu+d)/2) - log Gamma(nu/2) - d/2 log(nu pi).
  const double t_const = std::lgamma((nu + d) / 2.0) - std::lgamma(nu / 2.0) -
                         0.5 * d * std::log(nu * std::numbers::pi);

  auto means_ptr = std::make_shared<std::vector<Vector>>(std::move(means));
  auto geoms_ptr = std::make_shared<std::vector<ComponentGeometry>>(std::move(geoms));
  Vector log_w = weights.array().log();

  JointDensityFn joint = [means_ptr, geoms_ptr, log_w, nu, d, t_const](const Vector& x,
                                                                       bool need_grad) {
    const int n = static_cast<int>(means_ptr->size());
    Vector comp_logp(n);
    std::vector<Vector> solved(static_cast<std::size_t>(n));
    Vector mahal(n);
    for (int c = 0; c < n; ++c) {
      const auto& geom = (*geoms_ptr)[static_cast<std::size_t>(c)];
      const Vector centered = x - (*means_ptr)[static_cast<std::size_t>(c)];
      solved[static_cast<std::size_t>(c)] = geom.solve(centered);
      mahal[c] = centered.dot(solved[static_cast<std::size_t>(c)]);
      comp_logp[c] = log_w[c] + t_const - geom.log_det_half -
                     0.5 * (nu + d) * std::log1p(mahal[c] / nu);
    }
    Evaluation out;
    out.log_density = logsumexp(comp_logp);
    if (need_grad) {
      Vector grad = Vector::Zero(d);
      for (int c = 0; c < n; ++c) {
        const double resp = std::exp(comp_logp[c] - out.log_density);
        grad -= resp * ((nu + d) / (nu + mahal[c])) * solved[static_cast<std::size_t>(c)];
      }
      out.gradient = std::move(grad);
    }
    return out;
  };

  Vector mean = Vector::Zero(d);
  for (int c = 0; c < k; ++c) mean += weights[c] * (*means_ptr)[static_cast<std::size_t>(c)];
  Matrix cov = Matrix::Zero(d, d);
  const double t_cov_scale = nu / (nu - 2.0);
  for (int c = 0; c < k; ++c) {
    const Vector& mu = (*means_ptr)[static_cast<std::size_t>(c)];
    cov += weights[c] * (t_cov_scale * scales[static_cast<std::size_t>(c)] + mu * mu.transpose());
  }
  cov -= mean * mean.transpose();

  return AnalyticTarget{TargetModel(d, std::move(joint)), std::move(mean), std::move(cov), 0.0};
}

LogRegModel load_german_credit(const std::string& path) {
  constexpr int kRows = 1000;
  constexpr int kAttrs = 24;
  std::ifstream in(path);
  if (!in) throw ContractViolation("load_german_credit: cannot open " + path);

  Matrix raw(kRows, kAttrs);
  Vector y(kRows);
  std::string line;
  int row = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    if (row >= kRows) {
      throw ContractViolation("load_german_credit: more than 1000 data rows (line " +
                              std::to_string(line_no) + ")");
    }
    std::istringstream fields(line);
    double value;
    int col = 0;
    while (fields >> value) {
      if (col < kAttrs) {
        raw(row, col) = value;
      } else if (col == kAttrs) {
        if (value != 1.0 && value != 2.0) {
          throw ContractViolation("load_german_credit: label not in {1,2} at line " +
                                  std::to_string(line_no));
        }
        y[row] = value - 1.0;
      }
      ++col;
    }
    if (col != kAttrs + 1) {
      throw ContractViolation("load_german_credit: expected 25 fields, got " +
                              std::to_string(col) + " at line " + std::to_string(line_no));
    }
    ++row;
  }
  if (row != kRows) {
    throw ContractViolation("load_german_credit: expected 1000 rows, got " +
                            std::to_string(row));
  }

  LogRegModel model;
  model.X.resize(kRows, kAttrs + 1);
  for (int c = 0; c < kAttrs; ++c) {
    const double mean = raw.col(c).mean();
    const double sd = std::sqrt((raw.col(c).array() - mean).square().sum() / kRows);
    if (sd == 0.0) {
      throw ContractViolation("load_german_credit: constant attribute column " +
                              std::to_string(c + 1));
    }
    model.X.col(c) = (raw.col(c).array() - mean) / sd;
  }
  model.X.col(kAttrs).setOnes();
  model.y = std::move(y);
  return model;
}

TargetModel logreg_posterior(const LogRegModel& model) {
  auto shared = std::make_shared<LogRegModel>(model);
  const int d = static_cast<int>(model.dim());

  JointDensityFn joint = [shared](const Vector& beta, bool need_grad) {
    const Matrix& X = shared->X;
    const Vector& y = shared->y;
    const Vector eta = X * beta;
    // log(1 + e^z) evaluated without overflow on either tail.
    double loglik = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double z = eta[i];
      const double log1pexp = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      loglik += y[i] * z - log1pexp;
    }
    Evaluation out;
    out.log_density = loglik - beta.squaredNorm() / (2.0 * shared->sigma2_prior);
    if (need_grad) {
      Vector sigmoid(eta.size());
      for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double z = eta[i];
        sigmoid[i] = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                              : std::exp(z) / (1.0 + std::exp(z));
      }
      out.gradient = X.transpose() * (y - sigmoid) - beta / shared->sigma2_prior;
    }
    return out;
  };
  return TargetModel(d, std::move(joint));
}

LaplaceResult laplace_approx(TargetModel& target, const Vector& x0, const LaplaceOptions& opts) {
  const Eigen::Index d = target.dim();
  check_dim(x0, d, "laplace_approx");

  Vector x = x0;
  Evaluation eval = target.evaluate(x, true);
  double step = opts.initial_step;
  Vector prev_x;
  Vector prev_grad;
  std::int64_t iter = 0;
  while (eval.gradient->norm() >= opts.grad_tol) {
    if (++iter > opts.max_iter) {
      throw NumericalError("laplace_approx: no convergence after " +
                           std::to_string(opts.max_iter) + " iterations (|grad| = " +
                           std::to_string(eval.gradient->norm()) + ")");
    }
    const Vector g = *eval.gradient;
    // Barzilai-Borwein trial step (plain steepest-ascent steps crawl on
    // ill-conditioned posteriors), safeguarded by Armijo backtracking.
    double trial_step = step * 2.0;
    if (prev_x.size() > 0) {
      const Vector s = x - prev_x;
      const Vector y = g - prev_grad;
      const double sy = s.dot(y);
      if (sy < 0.0) trial_step = std::clamp(-s.squaredNorm() / sy, 1e-12, 1e8);
    }
    prev_x = x;
    prev_grad = g;
    // The sufficient-increase test allows for rounding noise in the density:
    // near the mode the true per-step gain is far below eps * |log f|.
    const double noise_floor = 1e-12 * (1.0 + std::abs(eval.log_density));
    for (;;) {
      const Vector candidate = x + trial_step * g;
      const Evaluation cand_eval = target.evaluate(candidate, true);
      if (std::isfinite(cand_eval.log_density) &&
          cand_eval.log_density >=
              eval.log_density + 1e-4 * trial_step * g.squaredNorm() - noise_floor) {
        x = candidate;
        eval = cand_eval;
        step = trial_step;
        break;
      }
      trial_step *= 0.5;
      if (trial_step < 1e-18) {
        throw NumericalError("laplace_approx: line search collapsed (|grad| = " +
                             std::to_string(g.norm()) + ")");
      }
    }
  }

  // Central finite differences of the gradient give the Hessian of log f;
  // symmetrize and invert its negation.
  Matrix hessian(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double h = opts.fd_step * (1.0 + std::abs(x[j]));
    Vector xp = x;
    Vector xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Vector gp = *target.evaluate(xp, true).gradient;
    const Vector gm = *target.evaluate(xm, true).gradient;
    hessian.col(j) = (gp - gm) / (2.0 * h);
  }
  Matrix neg_hessian = -0.5 * (hessian + hessian.transpose());
  Eigen::LLT<Matrix> llt(neg_hessian);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("laplace_approx: Hessian of -log f at the mode is not positive definite");
  }
  Matrix cov = llt.solve(Matrix::Identity(d, d));
  cov = 0.5 * (cov + cov.transpose());
  return LaplaceResult{std::move(x), std::move(cov)};
}

DefensiveIsResult defensive_is_ground_truth(TargetModel& target, const LaplaceResult& laplace,
                                            std::int64_t n_samples, RngStream& rng,
                                            const DefensiveIsOptions& opts) {
  if (opts.alpha <= 0.0 || opts.alpha > 1.0) {
    throw ContractViolation("defensive_is: alpha must be in (0, 1]");
  }
  if (n_samples < 2) throw ContractViolation("defensive_is: need at least 2 samples");
  const Eigen::Index d = target.dim();

  const Matrix narrow_factor = factorize(laplace.cov, 1e-12, "Laplace covariance");
  const Matrix wide_factor = opts.scale_inflation * narrow_factor;
  const ProposalParams narrow =
      ProposalParams::make(laplace.mode, Vector::Zero(d), narrow_factor);
  const ProposalParams wide = ProposalParams::make(laplace.mode, Vector::Zero(d), wide_factor);
  const double log_alpha = std::log(opts.alpha);
  const double log_1m_alpha = opts.alpha < 1.0 ? std::log1p(-opts.alpha) : 0.0;

  std::vector<Vector> samples(static_cast<std::size_t>(n_samples));
  Vector log_w(n_samples);
  for (std::int64_t i = 0; i < n_samples; ++i) {
    const bool use_narrow = opts.alpha >= 1.0 || rng.uniform() < opts.alpha;
    Vector x = propose(use_narrow ? narrow : wide, rng);
    double log_q;
    if (opts.alpha >= 1.0) {
      log_q = proposal_logpdf(x, narrow);
    } else {
      const double a = log_alpha + proposal_logpdf(x, narrow);
      const double b = log_1m_alpha + proposal_logpdf(x, wide);
      const double m = std::max(a, b);
      log_q = m + std::log(std::exp(a - m) + std::exp(b - m));
    }
    log_w[i] = target.evaluate(x, false).log_density - log_q;
    samples[static_cast<std::size_t>(i)] = std::move(x);
  }

  const Vector w = normalize_log_weights(log_w);
  DefensiveIsResult out;
  out.ess = 1.0 / w.squaredNorm();
  out.ess_below_floor = out.ess < opts.ess_floor;

  // log Z = log mean(w) computed in log space.
  const double max_lw = log_w.maxCoeff();
  out.log_evidence = max_lw + std::log((log_w.array() - max_lw).exp().sum()) -
                     std::log(static_cast<double>(n_samples));

  out.mean = Vector::Zero(d);
  for (std::int64_t i = 0; i < n_samples; ++i) {
    out.mean += w[i] * samples[static_cast<std::size_t>(i)];
  }
  out.variance = Vector::Zero(d);
  for (std::int64_t i = 0; i < n_samples; ++i) {
    out.variance +=
        w[i] * (samples[static_cast<std::size_t>(i)] - out.mean).array().square().matrix();
  }

  // Self-normalized IS delta-method standard errors:
  // Var(h_hat) ~= sum_i w_hat_i^2 (h(x_i) - h_hat)^2.
  Vector mean_var = Vector::Zero(d);
  Vector var_var = Vector::Zero(d);
  for (std::int64_t i = 0; i < n_samples; ++i) {
    const Vector& x = samples[static_cast<std::size_t>(i)];
    const Vector dev = x - out.mean;
    mean_var += (w[i] * w[i]) * dev.array().square().matrix();
    var_var +=
        (w[i] * w[i]) * (dev.array().square() - out.variance.array()).square().matrix();
  }
  out.mean_se = mean_var.array().sqrt();
  out.var_se = var_var.array().sqrt();
  return out;
}

}  // namespace gris
