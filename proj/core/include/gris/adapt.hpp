#pragma once

#include <gris/types.hpp>

#include <cstdint>

namespace gris {

/// Cholesky factor L with L L^T = C + j I, where j is the smallest value in
/// {0, jitter0, 10 jitter0, ..., 1e6 jitter0} for which the factorization
/// succeeds. Throws NumericalError (naming `label`) if none does.
Matrix factorize(const Matrix& C, double jitter0, const char* label = "matrix");

/// Running mean and adaptive scale matrix
///
///   C_t = C0                                  for t <= t0
///   C_t = s_d (cov(X_0, ..., X_{t-1}) + eps I)  for t >  t0
///
/// where cov uses the unbiased (n-1) denominator and t counts samples seen.
/// The scaled covariance is maintained by the one-sample recursion
///
///   C_{t+1} = (t-1)/t C_t
///           + s_d/t (t xbar_{t-1} xbar_{t-1}^T - (t+1) xbar_t xbar_t^T
///                    + x_t x_t^T + eps I)
///
/// (Haario, Saksman & Tamminen 2001), which telescopes exactly to the batch
/// formula. With fewer than two samples the sample covariance is taken to be
/// the zero matrix, so the tracked scale is s_d eps I until the recursion has
/// something to work with.
///
/// The Cholesky factor of current_scale() is refreshed from scratch every
/// `batch` observations (rank-one factor updates are not worth the complexity
/// at d <= 25); samplers that want a different cadence call refresh_factor()
/// themselves.
class AdaptState {
 public:
  AdaptState(Matrix C0, std::int64_t t0, double s_d, double eps, int batch = 1,
             double jitter0 = 1e-10);

  /// Folds x into the running mean and increments t.
  void update_moments(const Vector& x);

  /// Applies the covariance recursion for new sample x. Requires t >= 1
  /// (the state must already reflect at least one sample).
  void update_covariance(const Vector& x);

  /// update_covariance (when t >= 1) followed by update_moments, then a
  /// factor refresh every `batch` samples.
  void observe(const Vector& x);

  /// The scale matrix proposals should use right now: C0 while t <= t0,
  /// the adapted scaled covariance afterwards.
  const Matrix& current_scale() const;

  /// Recomputes the cached Cholesky factor of current_scale().
  void refresh_factor();

  const Matrix& factor() const { return factor_; }
  std::int64_t t() const { return t_; }
  const Vector& mean() const { return mean_; }
  const Matrix& scaled_cov() const { return scaled_cov_; }
  std::int64_t t0() const { return t0_; }
  double s_d() const { return s_d_; }
  double eps() const { return eps_; }
  Eigen::Index dim() const { return C0_.rows(); }

 private:
  Matrix C0_;
  std::int64_t t0_;
  double s_d_;
  double eps_;
  int batch_;
  double jitter0_;

  std::int64_t t_ = 0;
  Vector mean_;
  Matrix scaled_cov_;  // s_d (cov(X_0..X_{t-1}) + eps I)
  Matrix factor_;
  std::int64_t since_refresh_ = 0;
};

}  // namespace gris
