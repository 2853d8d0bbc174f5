#include <gris/gris.hpp>

#include <cmath>
#include <limits>

namespace gris {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Everything a stored sample must remember so that later iterations never
/// re-evaluate the target at it: ancestors supply their gradient to the drift
/// and, under a bridge, their g0 values to the mixed gradient.
struct ParticleRecord {
  Vector point;
  double log_f = 0.0;
  Vector grad_f;
  double log_g0 = 0.0;
  Vector grad_g0;
  bool has_g0 = false;
};

/// Streaming self-normalized moments of a weighted sample, kept stable by
/// rescaling the accumulators whenever a larger log-weight arrives.
class WeightedMoments {
 public:
  explicit WeightedMoments(Eigen::Index d)
      : sum_x_(Vector::Zero(d)), sum_x2_(Vector::Zero(d)) {}

  void add(const Vector& x, double log_w) {
    if (log_w == kNegInf) return;
    if (log_w > max_log_w_) {
      const double rescale = w_sum_ > 0.0 ? std::exp(max_log_w_ - log_w) : 0.0;
      w_sum_ *= rescale;
      sum_x_ *= rescale;
      sum_x2_ *= rescale;
      max_log_w_ = log_w;
    }
    const double w = std::exp(log_w - max_log_w_);
    w_sum_ += w;
    sum_x_ += w * x;
    sum_x2_ += w * x.array().square().matrix();
  }

  bool empty() const { return w_sum_ == 0.0; }
  Vector mean() const { return sum_x_ / w_sum_; }
  Vector second_moment() const { return sum_x2_ / w_sum_; }

 private:
  double max_log_w_ = kNegInf;
  double w_sum_ = 0.0;
  Vector sum_x_;
  Vector sum_x2_;
};

struct ResolvedConfig {
  std::int64_t t0;
  Matrix C0;
  double s_d;
  int batch;
};

ResolvedConfig resolve(const GrisConfig& cfg, Eigen::Index d) {
  if (cfg.population < 2) throw ContractViolation("gris: population must be >= 2");
  if (cfg.sample_size.has_value() == cfg.eval_budget.has_value()) {
    throw ContractViolation("gris: exactly one of sample_size / eval_budget must be set");
  }
  ResolvedConfig r;
  r.t0 = cfg.t0 >= 0 ? cfg.t0 : cfg.population;
  r.C0 = cfg.C0.size() > 0 ? cfg.C0
                           : Matrix((0.01 / static_cast<double>(d)) * Matrix::Identity(d, d));
  r.s_d = cfg.s_d > 0.0 ? cfg.s_d : 2.38 * 2.38 / static_cast<double>(d);
  r.batch = cfg.adapt_batch > 0 ? cfg.adapt_batch : cfg.population;
  return r;
}

SampleTrace run_engine(TargetModel& target, const BridgeSpec* bridge, const GrisConfig& cfg,
                       const std::vector<Vector>& init, RngStream& rng) {
  const Eigen::Index d = target.dim();
  const int p = cfg.population;
  const ResolvedConfig rc = resolve(cfg, d);
  if (static_cast<int>(init.size()) != p) {
    throw ContractViolation("gris: init must supply exactly `population` points");
  }
  std::optional<TargetModel> g0;
  if (bridge) {
    if (bridge->schedule.empty()) throw ContractViolation("gris: empty bridge schedule");
    double prev = 0.0;
    for (double rho : bridge->schedule) {
      if (rho <= prev || rho > 1.0) {
        throw ContractViolation("gris: bridge schedule must be increasing within (0, 1]");
      }
      prev = rho;
    }
    if (bridge->schedule.back() != 1.0) {
      throw ContractViolation("gris: bridge schedule must end at rho = 1");
    }
    g0.emplace(bridge->g0.clone());
  }

  AdaptState adapt(rc.C0, rc.t0, rc.s_d, cfg.eps, rc.batch);

  const int total_rhos = bridge ? static_cast<int>(bridge->schedule.size()) : 0;
  auto rho_at = [&](std::int64_t iteration) {
    if (!bridge || iteration > total_rhos) return 1.0;
    return bridge->schedule[static_cast<std::size_t>(iteration - 1)];
  };

  // Seed S with the initial particles (they are trimmed away at the end).
  std::vector<ParticleRecord> population;
  population.reserve(init.size());
  const double rho1 = rho_at(1);
  for (const Vector& x : init) {
    check_dim(x, d, "gris init point");
    ParticleRecord rec;
    rec.point = x;
    Evaluation ev = target.evaluate(x, true);
    if (!std::isfinite(ev.log_density)) {
      throw ContractViolation("gris: initial point has non-finite log-density");
    }
    rec.log_f = ev.log_density;
    rec.grad_f = std::move(*ev.gradient);
    if (bridge && rho1 < 1.0) {
      Evaluation e0 = g0->evaluate(x, true);
      rec.log_g0 = e0.log_density;
      rec.grad_g0 = std::move(*e0.gradient);
      rec.has_g0 = true;
      if (!std::isfinite(combine_bridge(bridge->kind, rho1, rec.log_g0, rec.log_f))) {
        throw ContractViolation("gris: initial point has zero density under g_1");
      }
    }
    population.push_back(std::move(rec));
  }

  SampleTrace trace;
  std::uint64_t next_checkpoint = cfg.checkpoint_stride;
  // Unweighted running moments over the resampled set (seeds excluded).
  std::int64_t s_count = 0;
  Vector s_sum = Vector::Zero(d);
  Vector s_sum2 = Vector::Zero(d);
  // Streaming log-sum-exp over the raw f/q weights for the evidence.
  double ev_max = kNegInf;
  double ev_sum = 0.0;
  WeightedMoments recycled(d);

  std::vector<ParticleRecord> batch(static_cast<std::size_t>(p));
  Vector propagation_lw(p);

  auto affordable = [&](std::uint64_t budget) {
    return target.eval_count() + static_cast<std::uint64_t>(p) <= budget;
  };

  std::int64_t iteration = 0;
  for (;;) {
    if (cfg.sample_size) {
      // Algorithm loop condition: |S| < m + p with S including the seeds.
      const std::int64_t s_len = static_cast<std::int64_t>(trace.samples.size()) + p;
      if (s_len >= *cfg.sample_size + p) break;
    } else if (!affordable(*cfg.eval_budget)) {
      break;
    }
    ++iteration;
    const double rho = rho_at(iteration);

    for (int i = 0; i < p; ++i) {
      // `population` holds exactly the last p entries of S.
      const ParticleRecord& ancestor =
          population[static_cast<std::size_t>(rng.uniform_below(static_cast<std::uint64_t>(p)))];

      Vector grad_eff;
      if (rho == 1.0) {
        grad_eff = ancestor.grad_f;
      } else if (bridge->kind == BridgeSpec::Kind::kGeometric) {
        grad_eff = (1.0 - rho) * ancestor.grad_g0 + rho * ancestor.grad_f;
      } else {
        // Mixture gradient via component responsibilities.
        const double log_gt =
            combine_bridge(bridge->kind, rho, ancestor.log_g0, ancestor.log_f);
        const double r0 = std::exp(std::log1p(-rho) + ancestor.log_g0 - log_gt);
        const double r1 = std::exp(std::log(rho) + ancestor.log_f - log_gt);
        grad_eff = r0 * ancestor.grad_g0 + r1 * ancestor.grad_f;
      }

      const ProposalParams params =
          make_drifted_proposal(ancestor.point, grad_eff, iteration, cfg.drift, adapt.factor());
      Vector x = propose(params, rng);

      ParticleRecord rec;
      Evaluation ev = target.evaluate(x, true);
      rec.log_f = ev.log_density;
      rec.grad_f = std::move(*ev.gradient);
      double log_gt = rec.log_f;
      if (bridge && rho < 1.0) {
        Evaluation e0 = g0->evaluate(x, true);
        rec.log_g0 = e0.log_density;
        rec.grad_g0 = std::move(*e0.gradient);
        rec.has_g0 = true;
        log_gt = combine_bridge(bridge->kind, rho, rec.log_g0, rec.log_f);
      }
      const double log_q = proposal_logpdf(x, params);
      const double lw_f = rec.log_f - log_q;
      propagation_lw[i] = (bridge && rho < 1.0) ? log_gt - log_q : lw_f;

      trace.raw_log_weights.push_back(lw_f);
      if (lw_f != kNegInf) {
        if (lw_f > ev_max) {
          ev_sum = ev_sum * std::exp(ev_max - lw_f) + 1.0;
          ev_max = lw_f;
        } else {
          ev_sum += std::exp(lw_f - ev_max);
        }
      }
      recycled.add(x, lw_f);

      rec.point = std::move(x);
      batch[static_cast<std::size_t>(i)] = std::move(rec);
    }

    std::vector<int> ancestors;
    try {
      ancestors = resample(cfg.resample_scheme, propagation_lw, p, rng);
    } catch (const DegeneratePopulation& e) {
      throw DegeneratePopulation(std::string(e.what()) + " (gris iteration " +
                                 std::to_string(iteration) + ")");
    }
    for (int idx : ancestors) {
      const ParticleRecord& chosen = batch[static_cast<std::size_t>(idx)];
      ++s_count;
      s_sum += chosen.point;
      s_sum2 += chosen.point.array().square().matrix();
      adapt.observe(chosen.point);
      trace.samples.push_back(chosen.point);
      trace.ancestry.push_back(idx);
      population.push_back(chosen);
    }
    // Only the last p entries can ever be ancestors; drop the rest.
    population.erase(population.begin(),
                     population.end() - static_cast<std::ptrdiff_t>(p));

    while (cfg.checkpoint_stride > 0 && target.eval_count() >= next_checkpoint) {
      SampleTrace::TraceCheckpoint cp;
      cp.eval_count = target.eval_count();
      cp.mean = s_sum / static_cast<double>(s_count);
      cp.second_moment = s_sum2 / static_cast<double>(s_count);
      cp.log_evidence =
          ev_max + std::log(ev_sum) -
          std::log(static_cast<double>(trace.raw_log_weights.size()));
      cp.recycled_mean = recycled.mean();
      cp.recycled_second_moment = recycled.second_moment();
      trace.checkpoints.push_back(std::move(cp));
      next_checkpoint += cfg.checkpoint_stride;
    }
  }

  trace.final_eval_count = target.eval_count();
  trace.iterations = iteration;
  if (cfg.checkpoint_stride > 0 && s_count > 0 &&
      (trace.checkpoints.empty() ||
       trace.checkpoints.back().eval_count < trace.final_eval_count)) {
    SampleTrace::TraceCheckpoint cp;
    cp.eval_count = trace.final_eval_count;
    cp.mean = s_sum / static_cast<double>(s_count);
    cp.second_moment = s_sum2 / static_cast<double>(s_count);
    cp.log_evidence = ev_max + std::log(ev_sum) -
                      std::log(static_cast<double>(trace.raw_log_weights.size()));
    cp.recycled_mean = recycled.mean();
    cp.recycled_second_moment = recycled.second_moment();
    trace.checkpoints.push_back(std::move(cp));
  }
  return trace;
}

}  // namespace

std::vector<double> rho_schedule(int T, RhoScheduleKind kind, double power) {
  if (T < 1) throw ContractViolation("rho_schedule: T must be >= 1");
  const double a = kind == RhoScheduleKind::kLinear ? 1.0 : power;
  if (a <= 0.0) throw ContractViolation("rho_schedule: power must be positive");
  std::vector<double> rho(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    rho[static_cast<std::size_t>(t - 1)] =
        std::pow(static_cast<double>(t) / static_cast<double>(T), a);
  }
  rho.back() = 1.0;
  return rho;
}

double combine_bridge(BridgeSpec::Kind kind, double rho, double log_g0, double log_f) {
  if (rho >= 1.0) return log_f;
  if (rho <= 0.0) return log_g0;
  if (kind == BridgeSpec::Kind::kGeometric) {
    return (1.0 - rho) * log_g0 + rho * log_f;
  }
  const double a = std::log1p(-rho) + log_g0;
  const double b = std::log(rho) + log_f;
  const double m = std::max(a, b);
  if (m == kNegInf) return kNegInf;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

std::pair<double, double> bridge_logdensity(const BridgeSpec& spec, TargetModel& target, int t,
                                            const Vector& x) {
  if (t < 1 || t > static_cast<int>(spec.schedule.size())) {
    throw ContractViolation("bridge_logdensity: t outside schedule");
  }
  const double rho = spec.schedule[static_cast<std::size_t>(t - 1)];
  const double log_f = target.evaluate(x, false).log_density;
  double log_g0 = 0.0;
  if (rho < 1.0) {
    TargetModel g0 = spec.g0.clone();
    log_g0 = g0.evaluate(x, false).log_density;
  }
  return {combine_bridge(spec.kind, rho, log_g0, log_f), log_f};
}

Vector SampleTrace::final_mean() const {
  if (samples.empty()) throw DegeneratePopulation("SampleTrace: no samples");
  Vector m = Vector::Zero(samples.front().size());
  for (const Vector& x : samples) m += x;
  return m / static_cast<double>(samples.size());
}

Vector SampleTrace::final_variance() const {
  const Vector m = final_mean();
  Vector v = Vector::Zero(m.size());
  for (const Vector& x : samples) v += (x - m).array().square().matrix();
  return v / static_cast<double>(samples.size());
}

double log_evidence(const std::vector<double>& raw_log_weights) {
  if (raw_log_weights.empty()) throw ContractViolation("log_evidence: no weights");
  double max_lw = kNegInf;
  for (double lw : raw_log_weights) max_lw = std::max(max_lw, lw);
  if (max_lw == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double lw : raw_log_weights) acc += std::exp(lw - max_lw);
  return max_lw + std::log(acc) - std::log(static_cast<double>(raw_log_weights.size()));
}

std::vector<Vector> gaussian_init(const Vector& start, const Matrix& C0, int population,
                                  RngStream& rng) {
  const Matrix L = factorize(C0, 1e-12, "initialization covariance");
  std::vector<Vector> init;
  init.reserve(static_cast<std::size_t>(population));
  for (int i = 0; i < population; ++i) {
    init.push_back(start + L.triangularView<Eigen::Lower>() * rng.normal_vector(start.size()));
  }
  return init;
}

SampleTrace gris_run(TargetModel& target, const GrisConfig& cfg, const std::vector<Vector>& init,
                     RngStream& rng) {
  return run_engine(target, nullptr, cfg, init, rng);
}

SampleTrace tempered_gris_run(TargetModel& target, const BridgeSpec& bridge,
                              const GrisConfig& cfg, const std::vector<Vector>& init,
                              RngStream& rng) {
  return run_engine(target, &bridge, cfg, init, rng);
}

}  // namespace gris
