#pragma once

#include <gris/diagnostics.hpp>
#include <gris/rng.hpp>
#include <gris/target.hpp>
#include <gris/types.hpp>

#include <optional>
#include <string>
#include <vector>

namespace gris {

/// A target plus whatever is known analytically about it: first and second
/// moments always, the log normalizing constant when the density as
/// implemented is unnormalized but integrable in closed form.
struct AnalyticTarget {
  TargetModel model;
  Vector mean;
  Matrix cov;
  std::optional<double> log_normalizer;

  GroundTruth ground_truth() const {
    return GroundTruth{mean, cov.diagonal(), "analytic", log_normalizer, std::nullopt};
  }
};

/// 5x5 lattice of 2-D Gaussians with weights decaying in distance from the
/// origin: w_ij proportional to exp(-|mu_ij| / weight_decay). Means sit at
/// spacing * {-2,...,2}^2.
struct GaussianGridSpec {
  int grid_side = 5;
  double spacing = 3.0;
  Matrix component_cov;  // empty = identity
  double weight_decay = 4.0;
};

AnalyticTarget gaussian_grid(const GaussianGridSpec& spec = {});

/// Plain multivariate normal, optionally scaled by exp(log_scale) so the
/// implemented density is unnormalized with known evidence log_scale. Used as
/// tempering initial distribution and as conjugate ground truth in tests.
AnalyticTarget gaussian_target(const Vector& mean, const Matrix& cov, double log_scale = 0.0);

/// 2-D banana-shaped measure
///   log f(x) = -x1^2 / (2 s) - (x2 - b (x1^2 - s))^2 / 2,
/// i.e. x1 ~ N(0, s) and x2 | x1 ~ N(b (x1^2 - s), 1) up to normalization.
struct BananaSpec {
  double b = 0.03;
  double s = 100.0;
};

AnalyticTarget banana(const BananaSpec& spec = {});

/// Mixture of three 10-D multivariate t distributions, 10 degrees of freedom,
/// scale matrices drawn from an inverse Wishart with identity scale and 10
/// degrees of freedom. Means, weights and scales are generated reproducibly
/// from gen_seed; moments are computed from the generated instance.
struct TMixtureSpec {
  int n_components = 3;
  int dim = 10;
  double dof = 10.0;
  Vector weights;  // empty = (0.5, 0.3, 0.2)
  // Explicit component parameters; left empty they are generated from
  // gen_seed (means uniform on [-mean_box, mean_box]^dim, scales inverse
  // Wishart with identity scale and `dof` degrees of freedom).
  std::vector<Vector> means;
  std::vector<Matrix> scales;
  std::uint64_t gen_seed = 20240901;
  double mean_box = 5.0;
};

AnalyticTarget t_mixture(const TMixtureSpec& spec = {});

/// Bayesian logistic regression design: standardized features plus intercept
/// column, labels in {0, 1}, independent N(0, sigma2_prior) priors per
/// coefficient.
struct LogRegModel {
  Matrix X;  // n x d, last column is the intercept
  Vector y;  // entries in {0, 1}
  double sigma2_prior = 100.0;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }
};

/// Loads the numeric rendition of the German credit data: 1000 whitespace-
/// separated lines of 24 numeric attributes followed by a label in {1, 2}.
/// Attributes are standardized to mean 0 / variance 1 and an intercept column
/// appended (d = 25); labels map 1 -> 0 (good), 2 -> 1 (bad).
LogRegModel load_german_credit(const std::string& path);

TargetModel logreg_posterior(const LogRegModel& model);

struct LaplaceOptions {
  double grad_tol = 1e-8;
  std::int64_t max_iter = 200000;
  double initial_step = 1.0;
  double fd_step = 1e-5;
};

struct LaplaceResult {
  Vector mode;
  Matrix cov;  // inverse of the symmetrized finite-difference Hessian of -log f
};

/// Gaussian approximation at the mode, found by backtracking gradient ascent.
/// Throws NumericalError on non-convergence or a non-PD Hessian.
LaplaceResult laplace_approx(TargetModel& target, const Vector& x0,
                             const LaplaceOptions& opts = {});

struct DefensiveIsOptions {
  double alpha = 0.5;            // weight of the unscaled Laplace component
  double scale_inflation = 1.5;  // inflation of the defensive component
  double ess_floor = 1000.0;
};

struct DefensiveIsResult {
  Vector mean;
  Vector variance;
  double ess;
  double log_evidence;
  Vector mean_se;  // self-normalized IS standard error of the mean estimate
  Vector var_se;
  bool ess_below_floor = false;

  GroundTruth ground_truth() const {
    return GroundTruth{mean, variance, "defensive_is", log_evidence, ess};
  }
};

/// Ground-truth moments by defensive importance sampling from the mixture
/// alpha N(mode, cov) + (1 - alpha) N(mode, inflation^2 cov).
DefensiveIsResult defensive_is_ground_truth(TargetModel& target, const LaplaceResult& laplace,
                                            std::int64_t n_samples, RngStream& rng,
                                            const DefensiveIsOptions& opts = {});

}  // namespace gris
