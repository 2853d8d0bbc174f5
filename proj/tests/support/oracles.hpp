#pragma once

// Test-side oracles, deliberately independent of the library implementations
// they check: two-pass batch moments, central finite differences, grid
// quadrature, and plain Monte Carlo statistics.

#include <gris/rng.hpp>
#include <gris/target.hpp>
#include <gris/types.hpp>

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace gris::test {

inline Vector batch_mean(const std::vector<Vector>& xs) {
  Vector m = Vector::Zero(xs.front().size());
  for (const Vector& x : xs) m += x;
  return m / static_cast<double>(xs.size());
}

/// Unbiased ((n-1)-denominator) two-pass sample covariance.
inline Matrix batch_covariance(const std::vector<Vector>& xs) {
  const Eigen::Index d = xs.front().size();
  const Vector m = batch_mean(xs);
  Matrix cov = Matrix::Zero(d, d);
  for (const Vector& x : xs) {
    const Vector c = x - m;
    cov += c * c.transpose();
  }
  return cov / static_cast<double>(xs.size() - 1);
}

/// Central finite-difference gradient with the per-coordinate step
/// h_i = h_scale (1 + |x_i|).
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                          double h_scale = 1e-5) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = h_scale * (1.0 + std::abs(x[i]));
    Vector xp = x;
    Vector xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Midpoint-rule integral of f over [ax, bx] x [ay, by].
inline double quadrature_2d(const std::function<double(double, double)>& f, double ax, double bx,
                            double ay, double by, int n) {
  const double hx = (bx - ax) / n;
  const double hy = (by - ay) / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = ax + (i + 0.5) * hx;
    for (int j = 0; j < n; ++j) {
      acc += f(x, ay + (j + 0.5) * hy);
    }
  }
  return acc * hx * hy;
}

inline double sample_mean(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

/// Multivariate normal target with analytic gradient; optionally scaled by
/// exp(log_scale) so its evidence is known and non-trivial.
inline TargetModel mvn_target(const Vector& mean, const Matrix& cov, double log_scale = 0.0) {
  const Eigen::Index d = mean.size();
  const Matrix precision = cov.llt().solve(Matrix::Identity(d, d));
  const double log_det = std::log(cov.llt().matrixL().determinant()) * 2.0;
  const double norm_const =
      -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * log_det + log_scale;
  return TargetModel(static_cast<int>(d), [mean, precision, norm_const](const Vector& x,
                                                                        bool need_grad) {
    Evaluation out;
    const Vector centered = x - mean;
    const Vector pc = precision * centered;
    out.log_density = norm_const - 0.5 * centered.dot(pc);
    if (need_grad) out.gradient = -pc;
    return out;
  });
}

/// Standard normal log-density in 1-D, handy for chain smoke tests.
inline TargetModel std_normal_target() {
  return mvn_target(Vector::Zero(1), Matrix::Identity(1, 1));
}

}  // namespace gris::test
