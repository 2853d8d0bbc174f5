#pragma once

#include <gris/types.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>

namespace gris {

/// Result of evaluating a target density at one point. The gradient is only
/// present when it was requested (or was already cached for the point).
struct Evaluation {
  double log_density = 0.0;
  std::optional<Vector> gradient;
};

/// Counts density/gradient evaluations, the budget unit of every experiment.
///
/// A joint density+gradient query at one point costs exactly one evaluation,
/// and so does re-querying the most recent point (samplers routinely ask for
/// the density first and the gradient of the same point right after). The
/// cache compares coordinates bitwise and holds only the latest point.
class EvalCounter {
 public:
  std::uint64_t count() const { return count_; }

  /// Returns the cached evaluation if `x` is bitwise equal to the last point
  /// seen and the cache already satisfies `need_grad`.
  const Evaluation* lookup(const Vector& x, bool need_grad) const;

  /// True when `x` is the cached point (regardless of gradient availability).
  bool is_cached_point(const Vector& x) const;

  void store(const Vector& x, Evaluation eval, bool charge);

  /// Extends the cached evaluation of the current point with its gradient.
  void add_gradient(Vector grad);

 private:
  std::uint64_t count_ = 0;
  std::optional<Vector> last_point_;
  Evaluation last_eval_;
};

/// Evaluates log f(x) and, when asked, its gradient in one pass so that work
/// shared between the two (residuals, responsibilities, ...) is done once.
using JointDensityFn = std::function<Evaluation(const Vector&, bool need_grad)>;

/// An evaluable (possibly unnormalized) log-density with gradient access and
/// a shared evaluation counter. Instances are confined to one worker at a
/// time; independent replicates should each own a clone().
class TargetModel {
 public:
  TargetModel(int dim, JointDensityFn joint);

  /// Convenience constructor from separate density and gradient callables.
  TargetModel(int dim, std::function<double(const Vector&)> log_density,
              std::function<Vector(const Vector&)> grad_log_density);

  int dim() const { return dim_; }

  /// Counted evaluation. Costs one evaluation unless `x` is bitwise identical
  /// to the most recently evaluated point (then zero).
  Evaluation evaluate(const Vector& x, bool need_grad);

  std::uint64_t eval_count() const { return counter_.count(); }

  /// Independent copy, counter state included.
  TargetModel clone() const { return *this; }

 private:
  int dim_;
  JointDensityFn joint_;
  EvalCounter counter_;
};

/// Free-function form of TargetModel::evaluate.
inline Evaluation counted_eval(TargetModel& target, const Vector& x, bool need_grad) {
  return target.evaluate(x, need_grad);
}

}  // namespace gris
