#include "experiment.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace gris::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Matrix scaled_identity_c0(double c0_scale, Eigen::Index d) {
  return (c0_scale * c0_scale / static_cast<double>(d)) * Matrix::Identity(d, d);
}

GrisConfig to_gris_config(const AlgorithmConfig& a, std::uint64_t eval_budget,
                          std::uint64_t stride, Eigen::Index d) {
  GrisConfig cfg;
  cfg.population = a.population;
  cfg.eval_budget = eval_budget;
  cfg.drift.delta = a.delta;
  cfg.drift.decay_exponent = a.decay_exponent;
  cfg.drift.cap_multiplier = a.drift_cap_multiplier;
  cfg.t0 = a.t0;
  cfg.C0 = scaled_identity_c0(a.c0_scale, d);
  cfg.s_d = a.s_d;
  cfg.eps = a.epsilon;
  cfg.adapt_batch = a.adapt_batch;
  cfg.resample_scheme = a.resampling == "systematic" ? ResampleScheme::kSystematic
                                                     : ResampleScheme::kMultinomial;
  cfg.checkpoint_stride = stride;
  return cfg;
}

void finalize_summary(RunOutcome& out, const GroundTruth& truth) {
  const Eigen::Index d = truth.mean.size();
  out.summary.se_mean.resize(d);
  out.summary.se_var.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double em = out.final_mean[i] - truth.mean[i];
    const double ev = out.final_var[i] - truth.variance[i];
    out.summary.se_mean[i] = em * em;
    out.summary.se_var[i] = ev * ev;
  }
  out.summary.max_se = max_se(out.final_mean, out.final_var, truth);
}

RunOutcome execute_single_run(const ExperimentConfig& cfg, const AnalyticTarget& prototype,
                              const GroundTruth& truth, int run_id) {
  RunOutcome out;
  out.run_id = run_id;
  try {
    TargetModel target = prototype.model.clone();
    RngStream rng = derive_run_stream(cfg.run.base_seed, static_cast<std::uint64_t>(run_id));
    const Eigen::Index d = target.dim();
    const Vector start = truth.mean;
    const AlgorithmConfig& a = cfg.algorithm;

    auto from_gris_trace = [&](const SampleTrace& trace, bool recycled) {
      for (const auto& cp : trace.checkpoints) {
        Checkpoint c;
        c.eval_count = cp.eval_count;
        c.mean = recycled ? cp.recycled_mean : cp.mean;
        const Vector& second = recycled ? cp.recycled_second_moment : cp.second_moment;
        c.variance = second - c.mean.array().square().matrix();
        c.log_evidence = cp.log_evidence;
        out.summary.checkpoints.push_back(std::move(c));
      }
      const auto& last = out.summary.checkpoints.back();
      out.final_mean = last.mean;
      out.final_var = last.variance;
      out.final_log_evidence = last.log_evidence;
      out.final_eval_count = trace.final_eval_count;
    };

    auto from_chain_trace = [&](const ChainTrace& trace) {
      for (const auto& cp : trace.checkpoints) {
        Checkpoint c;
        c.eval_count = cp.eval_count;
        c.mean = cp.mean;
        c.variance = cp.second_moment - cp.mean.array().square().matrix();
        out.summary.checkpoints.push_back(std::move(c));
      }
      const auto& last = out.summary.checkpoints.back();
      out.final_mean = last.mean;
      out.final_var = last.variance;
      out.final_eval_count = trace.final_eval_count;
      // ESS^MC needs a positive ground-truth variance in every dimension.
      if ((truth.variance.array() > 0.0).all()) {
        try {
          out.summary.ess_mc = ess_mc_min(trace.samples, truth).ess;
        } catch (const std::exception&) {
          // Degenerate chain; leave the figure unset.
        }
      }
    };

    switch (a.algorithm) {
      case Algorithm::kGris: {
        const GrisConfig gc = to_gris_config(a, cfg.run.eval_budget, cfg.run.checkpoint_stride, d);
        const auto init = gaussian_init(start, gc.C0, gc.population, rng);
        from_gris_trace(gris_run(target, gc, init, rng),
                        /*recycled=*/a.estimator == "weighted");
        break;
      }
      case Algorithm::kGrisTempered: {
        const GrisConfig gc = to_gris_config(a, cfg.run.eval_budget, cfg.run.checkpoint_stride, d);
        BridgeSpec bridge{
            a.bridge == "mixture" ? BridgeSpec::Kind::kMixture : BridgeSpec::Kind::kGeometric,
            gaussian_target(start, a.g0_scale * a.g0_scale * Matrix::Identity(d, d)).model,
            rho_schedule(a.bridge_steps,
                         a.bridge_power == 1.0 ? RhoScheduleKind::kLinear : RhoScheduleKind::kPower,
                         a.bridge_power)};
        // Seed particles from g0 so the bridge starts where g0 has mass.
        const auto init = gaussian_init(
            start, a.g0_scale * a.g0_scale * Matrix::Identity(d, d), gc.population, rng);
        from_gris_trace(tempered_gris_run(target, bridge, gc, init, rng), /*recycled=*/true);
        break;
      }
      case Algorithm::kAm: {
        AmConfig ac;
        ac.t0 = a.t0;
        ac.C0 = scaled_identity_c0(a.c0_scale, d);
        ac.s_d = a.s_d;
        ac.eps = a.epsilon;
        if (a.adapt_batch > 0) ac.adapt_batch = a.adapt_batch;
        from_chain_trace(run_am(target, ac, start, cfg.run.eval_budget,
                                cfg.run.checkpoint_stride, rng));
        break;
      }
      case Algorithm::kMalta: {
        MaltaConfig mc;
        mc.delta = a.delta;
        if (a.malta_cov_scale > 0.0) mc.cov = a.malta_cov_scale * Matrix::Identity(d, d);
        from_chain_trace(run_malta(target, mc, start, cfg.run.eval_budget,
                                   cfg.run.checkpoint_stride, rng));
        break;
      }
      case Algorithm::kTmala: {
        TmalaConfig tc;
        tc.delta = a.delta;
        tc.t0 = a.t0;
        tc.C0 = scaled_identity_c0(a.c0_scale, d);
        tc.s_d0 = a.s_d;
        tc.eps = a.epsilon;
        tc.A1 = a.A1;
        tc.drift_cap_multiplier = a.drift_cap_multiplier;
        from_chain_trace(run_tmala(target, tc, start, cfg.run.eval_budget,
                                   cfg.run.checkpoint_stride, rng));
        break;
      }
      case Algorithm::kHmc: {
        HmcConfig hc;
        hc.step_size = a.step_size;
        hc.n_leapfrog = a.n_leapfrog;
        from_chain_trace(run_hmc(target, hc, start, cfg.run.eval_budget,
                                 cfg.run.checkpoint_stride, rng));
        break;
      }
    }
    finalize_summary(out, truth);
    out.complete = true;
  } catch (const std::exception& e) {
    out.complete = false;
    out.error = e.what();
  }
  return out;
}

}  // namespace

GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ground-truth file " + path);
  json j;
  in >> j;
  GroundTruth truth;
  truth.mean = vector_from_json(j.at("mean"));
  truth.variance = vector_from_json(j.at("variance"));
  truth.source = j.at("source").get<std::string>();
  if (j.contains("log_evidence") && !j["log_evidence"].is_null()) {
    truth.log_evidence = j["log_evidence"].get<double>();
  }
  if (j.contains("ess") && !j["ess"].is_null()) truth.ess = j["ess"].get<double>();
  return truth;
}

void write_ground_truth(const GroundTruth& truth, const std::string& target_name,
                        const std::string& path) {
  json j;
  j["target"] = target_name;
  j["source"] = truth.source;
  j["dim"] = truth.mean.size();
  j["mean"] = vector_to_json(truth.mean);
  j["variance"] = vector_to_json(truth.variance);
  j["log_evidence"] = truth.log_evidence ? json(*truth.log_evidence) : json(nullptr);
  j["ess"] = truth.ess ? json(*truth.ess) : json(nullptr);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write ground-truth file " + path);
  out << j.dump(2) << "\n";
}

GroundTruth resolve_ground_truth(const ExperimentConfig& cfg) {
  if (!cfg.run.ground_truth_path.empty()) {
    return load_ground_truth(cfg.run.ground_truth_path);
  }
  if (cfg.target.kind == TargetKind::kLogReg) {
    throw std::runtime_error(
        "logreg has no analytic moments: generate a ground-truth file first "
        "(gris ground-truth --target logreg ...) and set run.ground_truth");
  }
  return build_target(cfg.target).ground_truth();
}

ExperimentResult execute_runs(const ExperimentConfig& cfg, const GroundTruth& truth) {
  const AnalyticTarget prototype = build_target(cfg.target);
  if (truth.mean.size() != prototype.model.dim()) {
    throw std::runtime_error("ground-truth dimension does not match the target");
  }
  ExperimentResult result;
  result.truth = truth;
  result.runs.resize(static_cast<std::size_t>(cfg.run.n_runs));

  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int jobs = std::max(1, std::min(cfg.run.n_runs,
                                        cfg.run.jobs > 0 ? cfg.run.jobs : std::max(hw, 1)));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int id = next.fetch_add(1);
      if (id >= cfg.run.n_runs) return;
      result.runs[static_cast<std::size_t>(id)] = execute_single_run(cfg, prototype, truth, id);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const RunOutcome& run : result.runs) result.all_complete &= run.complete;
  return result;
}

void write_run_csv(std::ostream& out, const RunOutcome& outcome, Eigen::Index dim) {
  out << "run_id,eval_count";
  for (Eigen::Index i = 1; i <= dim; ++i) out << ",mean_" << i;
  for (Eigen::Index i = 1; i <= dim; ++i) out << ",var_" << i;
  out << ",log_evidence\n";
  for (const Checkpoint& cp : outcome.summary.checkpoints) {
    out << outcome.run_id << ',' << cp.eval_count;
    for (Eigen::Index i = 0; i < dim; ++i) out << ',' << fmt17(cp.mean[i]);
    for (Eigen::Index i = 0; i < dim; ++i) out << ',' << fmt17(cp.variance[i]);
    out << ',';
    if (cp.log_evidence) out << fmt17(*cp.log_evidence);
    out << '\n';
  }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const GroundTruth truth = resolve_ground_truth(cfg);
  const ExperimentResult result = execute_runs(cfg, truth);

  const fs::path dir(cfg.run.output_dir);
  fs::create_directories(dir);
  const Eigen::Index d = truth.mean.size();

  for (const RunOutcome& run : result.runs) {
    if (!run.complete) continue;
    char name[32];
    std::snprintf(name, sizeof(name), "run_%03d.csv", run.run_id);
    std::ofstream out(dir / name);
    write_run_csv(out, run, d);
  }

  json summary;
  summary["version"] = "0.1.0";
  summary["target"] = cfg.target.name();
  summary["algorithm"] = cfg.algorithm.name();
  summary["config_snapshot"] = serialize_config(cfg);
  summary["base_seed"] = cfg.run.base_seed;
  summary["eval_budget"] = cfg.run.eval_budget;
  summary["n_runs"] = cfg.run.n_runs;
  summary["checkpoint_stride"] = cfg.run.checkpoint_stride;
  summary["rng"] = RngStream::kAlgorithm;
  summary["truth"] = {
      {"source", truth.source},
      {"mean", vector_to_json(truth.mean)},
      {"variance", vector_to_json(truth.variance)},
      {"log_evidence", truth.log_evidence ? json(*truth.log_evidence) : json(nullptr)},
      {"ess", truth.ess ? json(*truth.ess) : json(nullptr)},
  };
  summary["runs"] = json::array();
  for (const RunOutcome& run : result.runs) {
    json r;
    r["run_id"] = run.run_id;
    r["complete"] = run.complete;
    if (run.complete) {
      r["final_eval_count"] = run.final_eval_count;
      r["final_mean"] = vector_to_json(run.final_mean);
      r["final_var"] = vector_to_json(run.final_var);
      r["se_mean"] = vector_to_json(run.summary.se_mean);
      r["se_var"] = vector_to_json(run.summary.se_var);
      r["max_se"] = run.summary.max_se;
      r["log_evidence"] =
          run.final_log_evidence ? json(*run.final_log_evidence) : json(nullptr);
      r["ess_mc"] = run.summary.ess_mc ? json(*run.summary.ess_mc) : json(nullptr);
    } else {
      r["error"] = run.error;
    }
    summary["runs"].push_back(std::move(r));
  }
  // Wall-clock stamp, deliberately the last field: consumers comparing
  // summaries for reproducibility drop it.
  summary["timestamp"] = static_cast<std::int64_t>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());

  std::ofstream out(dir / "summary.json");
  out << summary.dump(2) << "\n";
  return result;
}

void emit_contour(const TargetConfig& cfg, std::ostream& out, int nx, int ny, double xmin,
                  double xmax, double ymin, double ymax, std::pair<int, int> dims) {
  if (nx < 2 || ny < 2) throw std::runtime_error("contour: nx and ny must be >= 2");
  AnalyticTarget target = build_target(cfg);
  const Eigen::Index d = target.model.dim();
  Vector base = target.mean;
  if (cfg.kind == TargetKind::kLogReg) {
    base = laplace_approx(target.model, Vector::Zero(d)).mode;
  }
  const auto [dx, dy] = dims;
  if (dx < 0 || dy < 0 || dx >= d || dy >= d || dx == dy) {
    throw std::runtime_error("contour: invalid dimension pair");
  }
  out << "x,y,log_f\n";
  // Affine-combination linspace: hits both endpoints exactly and keeps a
  // symmetric window symmetric in floating point.
  for (int i = 0; i < nx; ++i) {
    const double x = (xmin * (nx - 1 - i) + xmax * i) / (nx - 1);
    for (int j = 0; j < ny; ++j) {
      const double y = (ymin * (ny - 1 - j) + ymax * j) / (ny - 1);
      Vector point = base;
      point[dx] = x;
      point[dy] = y;
      out << fmt17(x) << ',' << fmt17(y) << ','
          << fmt17(target.model.evaluate(point, false).log_density) << '\n';
    }
  }
}

ContourWindow default_contour_window(const TargetConfig& cfg, std::pair<int, int> dims) {
  AnalyticTarget target = build_target(cfg);
  Vector base = target.mean;
  Vector sd = target.cov.diagonal().array().sqrt();
  if (cfg.kind == TargetKind::kLogReg) {
    const LaplaceResult lap = laplace_approx(target.model, Vector::Zero(target.model.dim()));
    base = lap.mode;
    sd = lap.cov.diagonal().array().sqrt();
  }
  return ContourWindow{base[dims.first] - 3.0 * sd[dims.first],
                       base[dims.first] + 3.0 * sd[dims.first],
                       base[dims.second] - 3.0 * sd[dims.second],
                       base[dims.second] + 3.0 * sd[dims.second]};
}

TuneResult tune_delta(const ExperimentConfig& cfg, const std::vector<double>& grid) {
  if (grid.empty()) throw std::runtime_error("tune: empty delta grid");
  const GroundTruth truth = resolve_ground_truth(cfg);
  TuneResult result;
  double best = std::numeric_limits<double>::infinity();
  for (double delta : grid) {
    ExperimentConfig candidate = cfg;
    candidate.algorithm.delta = delta;
    const ExperimentResult runs = execute_runs(candidate, truth);
    TuneEntry entry;
    entry.delta = delta;
    entry.complete = runs.all_complete;
    // Across-run variance of the final mean estimate, pooled over dims.
    const Eigen::Index d = truth.mean.size();
    Vector avg = Vector::Zero(d);
    int n = 0;
    for (const RunOutcome& run : runs.runs) {
      if (!run.complete) continue;
      avg += run.final_mean;
      ++n;
    }
    if (n >= 2) {
      avg /= n;
      Vector var = Vector::Zero(d);
      for (const RunOutcome& run : runs.runs) {
        if (!run.complete) continue;
        var += (run.final_mean - avg).array().square().matrix();
      }
      var /= (n - 1);
      entry.criterion = var.mean();
    } else {
      entry.criterion = std::numeric_limits<double>::infinity();
      entry.complete = false;
    }
    if (entry.complete && entry.criterion < best) {
      best = entry.criterion;
      result.best_delta = delta;
    }
    result.table.push_back(entry);
  }
  if (!std::isfinite(best)) throw std::runtime_error("tune: no delta completed all runs");
  return result;
}

}  // namespace gris::harness
