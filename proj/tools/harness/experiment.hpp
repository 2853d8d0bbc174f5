#pragma once

#include "config.hpp"

#include <gris/diagnostics.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gris::harness {

/// Full-precision ("%.17g") decimal rendering used for every numeric field
/// the harness writes; round-trips doubles exactly.
std::string fmt17(double x);

struct RunOutcome {
  int run_id = 0;
  bool complete = false;
  std::string error;
  RunSummary summary;
  std::uint64_t final_eval_count = 0;
  Vector final_mean;
  Vector final_var;
  std::optional<double> final_log_evidence;
};

struct ExperimentResult {
  GroundTruth truth;
  std::vector<RunOutcome> runs;
  bool all_complete = true;
};

/// Ground truth from the configured file when given, else analytic moments
/// for the synthetic targets. logreg requires the file (error otherwise).
GroundTruth resolve_ground_truth(const ExperimentConfig& cfg);

GroundTruth load_ground_truth(const std::string& path);
void write_ground_truth(const GroundTruth& truth, const std::string& target_name,
                        const std::string& path);

/// Executes all runs of the experiment on a worker pool (no files written).
ExperimentResult execute_runs(const ExperimentConfig& cfg, const GroundTruth& truth);

/// execute_runs plus artifacts: per-run CSV traces (run_XXX.csv) and
/// summary.json in cfg.run.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Writes one run's checkpoint trace as CSV (header + one row per
/// checkpoint; log_evidence column empty for MCMC runs).
void write_run_csv(std::ostream& out, const RunOutcome& outcome, Eigen::Index dim);

/// Grid of (x, y, log f) for two coordinates of a target; the remaining
/// coordinates are held at the analytic mean (the Laplace mode for logreg).
void emit_contour(const TargetConfig& cfg, std::ostream& out, int nx, int ny, double xmin,
                  double xmax, double ymin, double ymax, std::pair<int, int> dims);

/// Default contour window: slice mean +- 3 sd on the chosen dims.
struct ContourWindow {
  double xmin, xmax, ymin, ymax;
};
ContourWindow default_contour_window(const TargetConfig& cfg, std::pair<int, int> dims);

struct TuneEntry {
  double delta = 0.0;
  double criterion = 0.0;  // pooled across-run variance of the final mean estimate
  bool complete = true;
};

struct TuneResult {
  std::vector<TuneEntry> table;
  double best_delta = 0.0;
};

/// Grid search over delta, scoring each candidate by the across-run variance
/// of its final mean estimates pooled over dimensions.
TuneResult tune_delta(const ExperimentConfig& cfg, const std::vector<double>& grid);

}  // namespace gris::harness
