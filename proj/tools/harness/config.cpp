#include "config.hpp"

#include <cstdlib>
#include <stdexcept>

namespace gris::harness {

namespace {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

void check_unknown(const toml::Section& sec, const std::string& name) {
  const auto unknown = sec.unknown_keys();
  if (!unknown.empty()) {
    std::string msg = "unrecognized key(s) in [" + name + "]:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "gris") return Algorithm::kGris;
  if (name == "gris_tempered") return Algorithm::kGrisTempered;
  if (name == "am") return Algorithm::kAm;
  if (name == "malta") return Algorithm::kMalta;
  if (name == "tmala") return Algorithm::kTmala;
  if (name == "hmc") return Algorithm::kHmc;
  throw ConfigError("unknown algorithm '" + name +
                    "' (expected gris, gris_tempered, am, malta, tmala, hmc)");
}

const toml::Section kEmptySection;

const toml::Section& section_or_empty(const toml::Document& doc, const std::string& name) {
  const toml::Section* sec = doc.find_section(name);
  return sec ? *sec : kEmptySection;
}

}  // namespace

TargetKind target_kind_from_name(const std::string& name) {
  if (name == "gaussian_grid") return TargetKind::kGaussianGrid;
  if (name == "banana") return TargetKind::kBanana;
  if (name == "t_mixture") return TargetKind::kTMixture;
  if (name == "logreg") return TargetKind::kLogReg;
  throw ConfigError("unknown target '" + name +
                    "' (expected gaussian_grid, banana, t_mixture, logreg)");
}

std::string TargetConfig::name() const {
  switch (kind) {
    case TargetKind::kGaussianGrid: return "gaussian_grid";
    case TargetKind::kBanana: return "banana";
    case TargetKind::kTMixture: return "t_mixture";
    case TargetKind::kLogReg: return "logreg";
  }
  return "?";
}

std::string AlgorithmConfig::name() const {
  switch (algorithm) {
    case Algorithm::kGris: return "gris";
    case Algorithm::kGrisTempered: return "gris_tempered";
    case Algorithm::kAm: return "am";
    case Algorithm::kMalta: return "malta";
    case Algorithm::kTmala: return "tmala";
    case Algorithm::kHmc: return "hmc";
  }
  return "?";
}

TargetConfig load_target_config(const toml::Document& doc) {
  const toml::Section& sec = section_or_empty(doc, "target");
  TargetConfig cfg;
  cfg.kind = target_kind_from_name(sec.text("name", "banana"));

  cfg.grid.grid_side = static_cast<int>(sec.integer("grid_side", cfg.grid.grid_side));
  cfg.grid.spacing = sec.number("spacing", cfg.grid.spacing);
  cfg.grid.weight_decay = sec.number("weight_decay", cfg.grid.weight_decay);

  cfg.banana.b = sec.number("b", cfg.banana.b);
  cfg.banana.s = sec.number("s", cfg.banana.s);

  cfg.t_mix.dim = static_cast<int>(sec.integer("dim", cfg.t_mix.dim));
  cfg.t_mix.dof = sec.number("dof", cfg.t_mix.dof);
  cfg.t_mix.gen_seed = static_cast<std::uint64_t>(sec.integer(
      "gen_seed", static_cast<std::int64_t>(cfg.t_mix.gen_seed)));
  const std::vector<double> w = sec.numbers("mixture_weights");
  if (!w.empty()) {
    cfg.t_mix.weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    cfg.t_mix.n_components = static_cast<int>(w.size());
  }

  cfg.data_path = sec.text("data_path", "");
  cfg.sigma2_prior = sec.number("sigma2_prior", cfg.sigma2_prior);
  if (cfg.data_path.empty()) {
    if (const char* dir = std::getenv("GRIS_DATA_DIR")) {
      cfg.data_path = std::string(dir) + "/german.data-numeric";
    }
  }
  check_unknown(sec, "target");
  return cfg;
}

ExperimentConfig load_config(const toml::Document& doc) {
  ExperimentConfig cfg;
  cfg.target = load_target_config(doc);

  const toml::Section& alg = section_or_empty(doc, "algorithm");
  AlgorithmConfig& a = cfg.algorithm;
  a.algorithm = algorithm_from_name(alg.text("name", "gris"));
  a.population = static_cast<int>(alg.integer("population", a.population));
  a.delta = alg.number("delta", a.delta);
  a.decay_exponent = alg.number("decay_exponent", a.decay_exponent);
  a.drift_cap_multiplier = alg.number("drift_cap_multiplier", a.drift_cap_multiplier);
  a.t0 = alg.integer("t0", a.t0);
  a.c0_scale = alg.number("c0_scale", a.c0_scale);
  a.s_d = alg.number("s_d", a.s_d);
  a.epsilon = alg.number("epsilon", a.epsilon);
  a.adapt_batch = static_cast<int>(alg.integer("adapt_batch", a.adapt_batch));
  a.resampling = alg.text("resampling", a.resampling);
  if (a.resampling != "multinomial" && a.resampling != "systematic") {
    throw ConfigError("resampling must be 'multinomial' or 'systematic'");
  }
  a.estimator = alg.text("estimator", a.estimator);
  if (a.estimator != "resampled" && a.estimator != "weighted") {
    throw ConfigError("estimator must be 'resampled' or 'weighted'");
  }
  a.bridge = alg.text("bridge", a.bridge);
  if (a.bridge != "geometric" && a.bridge != "mixture") {
    throw ConfigError("bridge must be 'geometric' or 'mixture'");
  }
  a.bridge_steps = static_cast<int>(alg.integer("bridge_steps", a.bridge_steps));
  a.bridge_power = alg.number("bridge_power", a.bridge_power);
  a.g0_scale = alg.number("g0_scale", a.g0_scale);
  a.malta_cov_scale = alg.number("malta_cov_scale", a.malta_cov_scale);
  a.A1 = alg.number("A1", a.A1);
  a.step_size = alg.number("step_size", a.step_size);
  a.n_leapfrog = static_cast<int>(alg.integer("n_leapfrog", a.n_leapfrog));
  check_unknown(alg, "algorithm");

  const toml::Section& run = section_or_empty(doc, "run");
  RunConfig& r = cfg.run;
  r.eval_budget = static_cast<std::uint64_t>(
      run.integer("eval_budget", static_cast<std::int64_t>(r.eval_budget)));
  r.n_runs = static_cast<int>(run.integer("n_runs", r.n_runs));
  r.base_seed = static_cast<std::uint64_t>(
      run.integer("base_seed", static_cast<std::int64_t>(r.base_seed)));
  r.checkpoint_stride = static_cast<std::uint64_t>(
      run.integer("checkpoint_stride", static_cast<std::int64_t>(r.checkpoint_stride)));
  r.output_dir = run.text("output_dir", r.output_dir);
  r.jobs = static_cast<int>(run.integer("jobs", r.jobs));
  r.ground_truth_path = run.text("ground_truth", r.ground_truth_path);
  check_unknown(run, "run");

  if (const char* seed_env = std::getenv("GRIS_SEED")) {
    r.base_seed = std::strtoull(seed_env, nullptr, 10);
  }

  // Validation.
  if (r.n_runs < 1) throw ConfigError("n_runs must be >= 1");
  const bool population_based =
      a.algorithm == Algorithm::kGris || a.algorithm == Algorithm::kGrisTempered;
  if (population_based) {
    if (a.population < 2) throw ConfigError("population must be >= 2");
    if (r.eval_budget < 2 * static_cast<std::uint64_t>(a.population)) {
      throw ConfigError("eval_budget must be at least 2 * population");
    }
  }
  if (a.algorithm == Algorithm::kHmc && a.n_leapfrog < 1) {
    throw ConfigError("n_leapfrog must be >= 1");
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  return load_config(toml::parse_file(path));
}

AnalyticTarget build_target(const TargetConfig& cfg) {
  switch (cfg.kind) {
    case TargetKind::kGaussianGrid:
      return gaussian_grid(cfg.grid);
    case TargetKind::kBanana:
      return banana(cfg.banana);
    case TargetKind::kTMixture:
      return t_mixture(cfg.t_mix);
    case TargetKind::kLogReg: {
      if (cfg.data_path.empty()) {
        throw ConfigError(
            "logreg target needs a dataset: set data_path or the GRIS_DATA_DIR environment "
            "variable");
      }
      LogRegModel model = load_german_credit(cfg.data_path);
      model.sigma2_prior = cfg.sigma2_prior;
      TargetModel post = logreg_posterior(model);
      const Eigen::Index d = post.dim();
      return AnalyticTarget{std::move(post), Vector::Zero(d), Matrix::Zero(d, d), std::nullopt};
    }
  }
  throw ConfigError("unreachable target kind");
}

std::string serialize_config(const ExperimentConfig& cfg) {
  using toml::serialize_value;
  std::string out;
  out += "[target]\n";
  out += "name = " + serialize_value(cfg.target.name()) + "\n";
  switch (cfg.target.kind) {
    case TargetKind::kGaussianGrid:
      out += "grid_side = " + serialize_value(static_cast<std::int64_t>(cfg.target.grid.grid_side)) + "\n";
      out += "spacing = " + serialize_value(cfg.target.grid.spacing) + "\n";
      out += "weight_decay = " + serialize_value(cfg.target.grid.weight_decay) + "\n";
      break;
    case TargetKind::kBanana:
      out += "b = " + serialize_value(cfg.target.banana.b) + "\n";
      out += "s = " + serialize_value(cfg.target.banana.s) + "\n";
      break;
    case TargetKind::kTMixture: {
      out += "dim = " + serialize_value(static_cast<std::int64_t>(cfg.target.t_mix.dim)) + "\n";
      out += "dof = " + serialize_value(cfg.target.t_mix.dof) + "\n";
      out += "gen_seed = " +
             serialize_value(static_cast<std::int64_t>(cfg.target.t_mix.gen_seed)) + "\n";
      break;
    }
    case TargetKind::kLogReg:
      out += "data_path = " + serialize_value(cfg.target.data_path) + "\n";
      out += "sigma2_prior = " + serialize_value(cfg.target.sigma2_prior) + "\n";
      break;
  }

  const AlgorithmConfig& a = cfg.algorithm;
  out += "\n[algorithm]\n";
  out += "name = " + serialize_value(a.name()) + "\n";
  const bool population_based =
      a.algorithm == Algorithm::kGris || a.algorithm == Algorithm::kGrisTempered;
  const bool adaptive = population_based || a.algorithm == Algorithm::kAm ||
                        a.algorithm == Algorithm::kTmala;
  if (population_based) {
    out += "population = " + serialize_value(static_cast<std::int64_t>(a.population)) + "\n";
    out += "resampling = " + serialize_value(a.resampling) + "\n";
  }
  if (a.algorithm == Algorithm::kGris) {
    out += "estimator = " + serialize_value(a.estimator) + "\n";
  }
  if (population_based || a.algorithm == Algorithm::kMalta || a.algorithm == Algorithm::kTmala) {
    out += "delta = " + serialize_value(a.delta) + "\n";
  }
  if (population_based) {
    out += "decay_exponent = " + serialize_value(a.decay_exponent) + "\n";
  }
  if (population_based || a.algorithm == Algorithm::kTmala) {
    out += "drift_cap_multiplier = " + serialize_value(a.drift_cap_multiplier) + "\n";
  }
  if (adaptive) {
    out += "t0 = " + serialize_value(a.t0) + "\n";
    out += "c0_scale = " + serialize_value(a.c0_scale) + "\n";
    out += "s_d = " + serialize_value(a.s_d) + "\n";
    out += "epsilon = " + serialize_value(a.epsilon) + "\n";
    out += "adapt_batch = " + serialize_value(static_cast<std::int64_t>(a.adapt_batch)) + "\n";
  }
  if (a.algorithm == Algorithm::kGrisTempered) {
    out += "bridge = " + serialize_value(a.bridge) + "\n";
    out += "bridge_steps = " + serialize_value(static_cast<std::int64_t>(a.bridge_steps)) + "\n";
    out += "bridge_power = " + serialize_value(a.bridge_power) + "\n";
    out += "g0_scale = " + serialize_value(a.g0_scale) + "\n";
  }
  if (a.algorithm == Algorithm::kMalta) {
    out += "malta_cov_scale = " + serialize_value(a.malta_cov_scale) + "\n";
  }
  if (a.algorithm == Algorithm::kTmala) {
    out += "A1 = " + serialize_value(a.A1) + "\n";
  }
  if (a.algorithm == Algorithm::kHmc) {
    out += "step_size = " + serialize_value(a.step_size) + "\n";
    out += "n_leapfrog = " + serialize_value(static_cast<std::int64_t>(a.n_leapfrog)) + "\n";
  }

  const RunConfig& r = cfg.run;
  out += "\n[run]\n";
  out += "eval_budget = " + serialize_value(static_cast<std::int64_t>(r.eval_budget)) + "\n";
  out += "n_runs = " + serialize_value(static_cast<std::int64_t>(r.n_runs)) + "\n";
  out += "base_seed = " + serialize_value(static_cast<std::int64_t>(r.base_seed)) + "\n";
  out += "checkpoint_stride = " +
         serialize_value(static_cast<std::int64_t>(r.checkpoint_stride)) + "\n";
  out += "output_dir = " + serialize_value(r.output_dir) + "\n";
  out += "jobs = " + serialize_value(static_cast<std::int64_t>(r.jobs)) + "\n";
  if (!r.ground_truth_path.empty()) {
    out += "ground_truth = " + serialize_value(r.ground_truth_path) + "\n";
  }
  return out;
}

}  // namespace gris::harness
