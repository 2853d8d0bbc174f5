#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace gris {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point in the support of a target density. Populations and traces only
/// ever store points with all-finite coordinates.
using Point = Vector;

/// Violation of an API precondition (dimension mismatch, bad configuration).
struct ContractViolation : std::logic_error {
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

/// All importance weights of a population are -inf (or a required sample set
/// is empty). Nothing sensible can be resampled or normalized.
struct DegeneratePopulation : std::runtime_error {
  explicit DegeneratePopulation(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical operation failed beyond recovery (e.g. a matrix that cannot be
/// factorized even with the maximum jitter).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline bool all_finite(const Vector& v) {
  return v.allFinite();
}

inline void check_dim(const Vector& x, Eigen::Index dim, const char* where) {
  if (x.size() != dim) {
    throw ContractViolation(std::string(where) + ": expected dimension " +
                            std::to_string(dim) + ", got " + std::to_string(x.size()));
  }
}

}  // namespace gris
