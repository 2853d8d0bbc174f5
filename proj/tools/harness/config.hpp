#pragma once

#include "minitoml.hpp"

#include <gris/baselines.hpp>
#include <gris/gris.hpp>
#include <gris/targets.hpp>

#include <optional>
#include <string>

namespace gris::harness {

enum class TargetKind { kGaussianGrid, kBanana, kTMixture, kLogReg };
enum class Algorithm { kGris, kGrisTempered, kAm, kMalta, kTmala, kHmc };

struct TargetConfig {
  TargetKind kind = TargetKind::kBanana;
  GaussianGridSpec grid;
  BananaSpec banana;
  TMixtureSpec t_mix;
  std::string data_path;  // logreg; empty = $GRIS_DATA_DIR/german.data-numeric
  double sigma2_prior = 100.0;

  std::string name() const;
};

struct AlgorithmConfig {
  Algorithm algorithm = Algorithm::kGris;

  // Shared adaptive-proposal knobs.
  int population = 20;
  double delta = 0.5;
  double decay_exponent = 1.5;
  double drift_cap_multiplier = 10.0;
  std::int64_t t0 = -1;
  double c0_scale = 0.1;  // C0 = (c0_scale^2 / d) I
  double s_d = -1.0;
  double epsilon = 1e-6;
  int adapt_batch = -1;
  std::string resampling = "multinomial";
  // "resampled": unweighted average over the resampled set S (the default);
  // "weighted": self-normalized estimate from the raw f/q weight stream.
  std::string estimator = "resampled";

  // Tempered bridge.
  std::string bridge = "geometric";
  int bridge_steps = 10;
  double bridge_power = 1.0;
  double g0_scale = 10.0;  // g0 = N(H, g0_scale^2 I)

  // MALTA / T-MALA.
  double malta_cov_scale = -1.0;  // <= 0: (2.38^2 / d) I
  double A1 = 1000.0;

  // HMC.
  double step_size = 0.2;
  int n_leapfrog = 10;

  std::string name() const;
};

struct RunConfig {
  std::uint64_t eval_budget = 3000;
  int n_runs = 20;
  std::uint64_t base_seed = 20250811;
  std::uint64_t checkpoint_stride = 100;
  std::string output_dir = "out";
  int jobs = 0;  // 0 = hardware concurrency
  std::string ground_truth_path;
};

struct ExperimentConfig {
  TargetConfig target;
  AlgorithmConfig algorithm;
  RunConfig run;
};

/// Parses and validates a config document; honors the GRIS_SEED and
/// GRIS_DATA_DIR environment overrides. Unknown keys are errors.
ExperimentConfig load_config(const toml::Document& doc);
ExperimentConfig load_config_file(const std::string& path);

/// Parses only the [target] section (used by ground-truth / contour).
TargetConfig load_target_config(const toml::Document& doc);

/// Full round-trippable TOML snapshot of a config.
std::string serialize_config(const ExperimentConfig& cfg);

/// Builds the target named by the config. For logreg the AnalyticTarget
/// moments are placeholders (zeros); ground truth comes from defensive IS.
AnalyticTarget build_target(const TargetConfig& cfg);

TargetKind target_kind_from_name(const std::string& name);

}  // namespace gris::harness
