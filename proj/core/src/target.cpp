#include <gris/target.hpp>

#include <cstring>

namespace gris {

namespace {

bool bitwise_equal(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

const Evaluation* EvalCounter::lookup(const Vector& x, bool need_grad) const {
  if (!last_point_ || !bitwise_equal(*last_point_, x)) return nullptr;
  if (need_grad && !last_eval_.gradient) return nullptr;
  return &last_eval_;
}

bool EvalCounter::is_cached_point(const Vector& x) const {
  return last_point_ && bitwise_equal(*last_point_, x);
}

void EvalCounter::store(const Vector& x, Evaluation eval, bool charge) {
  if (charge) ++count_;
  last_point_ = x;
  last_eval_ = std::move(eval);
}

void EvalCounter::add_gradient(Vector grad) {
  last_eval_.gradient = std::move(grad);
}

TargetModel::TargetModel(int dim, JointDensityFn joint)
    : dim_(dim), joint_(std::move(joint)) {
  if (dim_ < 1) throw ContractViolation("TargetModel: dim must be positive");
}

TargetModel::TargetModel(int dim, std::function<double(const Vector&)> log_density,
                         std::function<Vector(const Vector&)> grad_log_density)
    : TargetModel(dim, [logf = std::move(log_density),
                        grad = std::move(grad_log_density)](const Vector& x, bool need_grad) {
        Evaluation out;
        out.log_density = logf(x);
        if (need_grad) out.gradient = grad(x);
        return out;
      }) {}

Evaluation TargetModel::evaluate(const Vector& x, bool need_grad) {
  check_dim(x, dim_, "TargetModel::evaluate");
  if (const Evaluation* hit = counter_.lookup(x, need_grad)) return *hit;
  if (counter_.is_cached_point(x)) {
    // Same point, gradient not cached yet: complete the pair at no extra cost.
    Evaluation eval = joint_(x, /*need_grad=*/true);
    if (!eval.gradient || eval.gradient->size() != dim_) {
      throw ContractViolation("TargetModel: gradient length does not match dim");
    }
    counter_.add_gradient(std::move(*eval.gradient));
    return *counter_.lookup(x, need_grad);
  }
  Evaluation eval = joint_(x, need_grad);
  if (need_grad && (!eval.gradient || eval.gradient->size() != dim_)) {
    throw ContractViolation("TargetModel: gradient length does not match dim");
  }
  counter_.store(x, eval, /*charge=*/true);
  return eval;
}

}  // namespace gris
