#include <gris/adapt.hpp>

#include <Eigen/Cholesky>

#include <sstream>

namespace gris {

Matrix factorize(const Matrix& C, double jitter0, const char* label) {
  if (C.rows() != C.cols()) {
    throw ContractViolation(std::string("factorize: ") + label + " is not square");
  }
  const Eigen::Index d = C.rows();
  double jitter = 0.0;
  // Attempts 0..7 try j in {0, jitter0, 10 jitter0, ..., 1e6 jitter0}.
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::LLT<Matrix> llt(C + jitter * Matrix::Identity(d, d));
    if (llt.info() == Eigen::Success) {
      Matrix L = llt.matrixL();
      // LLT can report success on a semidefinite borderline; insist on a
      // strictly positive diagonal so downstream log-determinants are finite.
      if ((L.diagonal().array() > 0.0).all()) return L;
    }
    jitter = (attempt == 0) ? jitter0 : jitter * 10.0;
    if (jitter == 0.0) break;  // jitter0 == 0 cannot escalate
  }
  std::ostringstream msg;
  msg << "factorize: " << label << " (" << d << "x" << d
      << ", |C|_F = " << C.norm() << ", diag range [" << C.diagonal().minCoeff()
      << ", " << C.diagonal().maxCoeff() << "]) is not factorizable even with jitter "
      << jitter0 << " * 1e6";
  throw NumericalError(msg.str());
}

AdaptState::AdaptState(Matrix C0, std::int64_t t0, double s_d, double eps, int batch,
                       double jitter0)
    : C0_(std::move(C0)),
      t0_(t0),
      s_d_(s_d),
      eps_(eps),
      batch_(batch),
      jitter0_(jitter0) {
  if (C0_.rows() != C0_.cols()) throw ContractViolation("AdaptState: C0 must be square");
  if (s_d_ <= 0.0) throw ContractViolation("AdaptState: s_d must be positive");
  if (eps_ < 0.0) throw ContractViolation("AdaptState: eps must be non-negative");
  if (t0_ < 0) throw ContractViolation("AdaptState: t0 must be non-negative");
  if (batch_ < 1) throw ContractViolation("AdaptState: batch must be >= 1");
  const Eigen::Index d = C0_.rows();
  mean_ = Vector::Zero(d);
  scaled_cov_ = s_d_ * eps_ * Matrix::Identity(d, d);
  refresh_factor();
}

void AdaptState::update_moments(const Vector& x) {
  check_dim(x, dim(), "AdaptState::update_moments");
  ++t_;
  mean_ += (x - mean_) / static_cast<double>(t_);
}

void AdaptState::update_covariance(const Vector& x) {
  check_dim(x, dim(), "AdaptState::update_covariance");
  if (t_ < 1) {
    throw ContractViolation("AdaptState::update_covariance: no prior samples (t = 0)");
  }
  const double t = static_cast<double>(t_);
  const Vector new_mean = mean_ + (x - mean_) / (t + 1.0);
  Matrix correction = t * (mean_ * mean_.transpose()) -
                      (t + 1.0) * (new_mean * new_mean.transpose()) +
                      x * x.transpose();
  correction.diagonal().array() += eps_;
  scaled_cov_ = ((t - 1.0) / t) * scaled_cov_ + (s_d_ / t) * correction;
}

void AdaptState::observe(const Vector& x) {
  if (t_ >= 1) update_covariance(x);
  update_moments(x);
  if (++since_refresh_ >= batch_) refresh_factor();
}

const Matrix& AdaptState::current_scale() const {
  return t_ <= t0_ ? C0_ : scaled_cov_;
}

void AdaptState::refresh_factor() {
  factor_ = factorize(current_scale(), jitter0_, "adaptive scale matrix");
  since_refresh_ = 0;
}

}  // namespace gris
