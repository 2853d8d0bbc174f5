#include "../harness/config.hpp"
#include "../harness/experiment.hpp"
#include "../harness/report.hpp"

#include <gris/targets.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

using namespace gris;
using namespace gris::harness;

namespace {

int cmd_run(const std::string& config_path, int jobs_override) {
  ExperimentConfig cfg = load_config_file(config_path);
  if (jobs_override > 0) cfg.run.jobs = jobs_override;
  const ExperimentResult result = run_experiment(cfg);
  int complete = 0;
  for (const RunOutcome& run : result.runs) {
    if (run.complete) {
      ++complete;
    } else {
      std::cerr << "run " << run.run_id << " failed: " << run.error << "\n";
    }
  }
  std::cout << complete << "/" << result.runs.size() << " runs complete, artifacts in "
            << cfg.run.output_dir << "\n";
  return result.all_complete ? 0 : 1;
}

int cmd_ground_truth(const std::string& target_name, const std::string& config_path,
                     const std::string& out_path, const std::string& data_path,
                     std::int64_t n_samples, std::uint64_t seed, double alpha, double inflation,
                     double ess_floor) {
  TargetConfig cfg;
  if (!config_path.empty()) {
    cfg = load_target_config(toml::parse_file(config_path));
  } else {
    cfg.kind = target_kind_from_name(target_name);
    if (const char* dir = std::getenv("GRIS_DATA_DIR")) {
      cfg.data_path = std::string(dir) + "/german.data-numeric";
    }
  }
  if (!data_path.empty()) cfg.data_path = data_path;

  GroundTruth truth;
  if (cfg.kind == TargetKind::kLogReg) {
    AnalyticTarget target = build_target(cfg);
    const LaplaceResult laplace =
        laplace_approx(target.model, Vector::Zero(target.model.dim()));
    DefensiveIsOptions opts;
    opts.alpha = alpha;
    opts.scale_inflation = inflation;
    opts.ess_floor = ess_floor;
    RngStream rng(seed, 0);
    const DefensiveIsResult dis =
        defensive_is_ground_truth(target.model, laplace, n_samples, rng, opts);
    std::cout << "defensive IS: ESS = " << dis.ess << " of " << n_samples << " samples\n";
    if (dis.ess_below_floor) {
      std::cerr << "ESS below the certification floor (" << ess_floor
                << "); refusing to write ground truth\n";
      return 2;
    }
    truth = dis.ground_truth();
  } else {
    truth = build_target(cfg).ground_truth();
  }
  write_ground_truth(truth, cfg.name(), out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_contour(const std::string& target_name, const std::string& config_path,
                const std::string& out_path, int nx, int ny, double xmin, double xmax,
                double ymin, double ymax, const std::string& dims_arg) {
  TargetConfig cfg;
  if (!config_path.empty()) {
    cfg = load_target_config(toml::parse_file(config_path));
  } else {
    cfg.kind = target_kind_from_name(target_name);
    if (const char* dir = std::getenv("GRIS_DATA_DIR")) {
      cfg.data_path = std::string(dir) + "/german.data-numeric";
    }
  }

  const Eigen::Index d = build_target(cfg).model.dim();
  std::pair<int, int> dims{0, 1};
  if (!dims_arg.empty()) {
    if (std::sscanf(dims_arg.c_str(), "%d,%d", &dims.first, &dims.second) != 2) {
      std::cerr << "--dims expects i,j\n";
      return 2;
    }
  } else if (d > 2) {
    dims = {static_cast<int>(d) - 2, static_cast<int>(d) - 1};
  }

  if (!(xmin < xmax) || !(ymin < ymax)) {
    const ContourWindow w = default_contour_window(cfg, dims);
    xmin = w.xmin;
    xmax = w.xmax;
    ymin = w.ymin;
    ymax = w.ymax;
  }
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "cannot write " << out_path << "\n";
    return 1;
  }
  emit_contour(cfg, out, nx, ny, xmin, xmax, ymin, ymax, dims);
  std::cout << "wrote " << out_path << " (" << nx * ny << " grid points)\n";
  return 0;
}

int cmd_tune(const std::string& config_path, const std::string& grid_arg) {
  ExperimentConfig cfg = load_config_file(config_path);
  std::vector<double> grid;
  std::string token;
  std::istringstream ss(grid_arg);
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) grid.push_back(std::stod(token));
  }
  const TuneResult result = tune_delta(cfg, grid);
  std::cout << "delta,across_run_variance,complete\n";
  for (const TuneEntry& entry : result.table) {
    std::cout << fmt17(entry.delta) << ',' << fmt17(entry.criterion) << ','
              << (entry.complete ? "true" : "false") << "\n";
  }
  std::cout << "best_delta = " << fmt17(result.best_delta) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient importance sampling experiment harness"};
  app.require_subcommand(1);

  // run
  std::string run_config;
  int run_jobs = 0;
  CLI::App* run = app.add_subcommand("run", "Run a configured experiment");
  run->add_option("--config", run_config, "TOML experiment config")->required();
  run->add_option("--jobs", run_jobs, "Worker threads (default: config / hardware)");

  // report
  std::string report_dir;
  CLI::App* report = app.add_subcommand("report", "Aggregate tables from an experiment directory");
  report->add_option("--dir", report_dir, "Experiment output directory")->required();

  // ground-truth
  std::string gt_target = "banana", gt_config, gt_out = "truth.json", gt_data;
  std::int64_t gt_samples = 10000;
  std::uint64_t gt_seed = 1;
  double gt_alpha = 0.5, gt_inflation = 1.5, gt_floor = 1000.0;
  CLI::App* gt = app.add_subcommand("ground-truth", "Write a ground-truth JSON file");
  gt->add_option("--target", gt_target, "gaussian_grid | banana | t_mixture | logreg");
  gt->add_option("--config", gt_config, "Read [target] from this TOML file instead");
  gt->add_option("--out", gt_out, "Output JSON path")->required();
  gt->add_option("--data", gt_data, "Dataset path (logreg)");
  gt->add_option("--samples", gt_samples, "Defensive-IS sample count (logreg)");
  gt->add_option("--seed", gt_seed, "Defensive-IS seed (logreg)");
  gt->add_option("--alpha", gt_alpha, "Defensive mixture weight of the Laplace component");
  gt->add_option("--inflation", gt_inflation, "Scale inflation of the defensive component");
  gt->add_option("--ess-floor", gt_floor, "Refuse to certify below this ESS");

  // contour
  std::string ct_target = "banana", ct_config, ct_out = "contour.csv", ct_dims;
  int ct_nx = 100, ct_ny = 100;
  double ct_xmin = 0.0, ct_xmax = 0.0, ct_ymin = 0.0, ct_ymax = 0.0;
  CLI::App* contour = app.add_subcommand("contour", "Emit a log-density grid as CSV");
  contour->add_option("--target", ct_target, "Target name");
  contour->add_option("--config", ct_config, "Read [target] from this TOML file instead");
  contour->add_option("--out", ct_out, "Output CSV path")->required();
  contour->add_option("--nx", ct_nx, "Grid points in x");
  contour->add_option("--ny", ct_ny, "Grid points in y");
  contour->add_option("--xmin", ct_xmin, "Window (defaults to mean +- 3 sd)");
  contour->add_option("--xmax", ct_xmax, "");
  contour->add_option("--ymin", ct_ymin, "");
  contour->add_option("--ymax", ct_ymax, "");
  contour->add_option("--dims", ct_dims, "Coordinate pair i,j (default: last two for d > 2)");

  // tune
  std::string tune_config, tune_grid;
  CLI::App* tune = app.add_subcommand("tune", "Grid-search delta for low estimator variance");
  tune->add_option("--config", tune_config, "TOML experiment config")->required();
  tune->add_option("--grid", tune_grid, "Comma-separated delta values")->required();

  // print-config
  CLI::App* print_config = app.add_subcommand("print-config", "Print a full default config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_config, run_jobs);
    if (report->parsed()) {
      write_report(report_dir);
      std::cout << "wrote report tables in " << report_dir << "\n";
      return 0;
    }
    if (gt->parsed()) {
      return cmd_ground_truth(gt_target, gt_config, gt_out, gt_data, gt_samples, gt_seed,
                              gt_alpha, gt_inflation, gt_floor);
    }
    if (contour->parsed()) {
      return cmd_contour(ct_target, ct_config, ct_out, ct_nx, ct_ny, ct_xmin, ct_xmax, ct_ymin,
                         ct_ymax, ct_dims);
    }
    if (tune->parsed()) return cmd_tune(tune_config, tune_grid);
    if (print_config->parsed()) {
      std::cout << serialize_config(ExperimentConfig{});
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
