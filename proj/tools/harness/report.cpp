#include "report.hpp"

#include "experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gris::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double quantile(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

struct LoadedRun {
  RunSummary summary;
  int run_id = 0;
};

LoadedRun read_run_csv(const fs::path& path, Eigen::Index d) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace " + path.string());
  const std::size_t expected = 2 + 2 * static_cast<std::size_t>(d) + 1;
  LoadedRun run;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != expected) {
      throw std::runtime_error("malformed trace row in " + path.string());
    }
    run.run_id = std::stoi(fields[0]);
    Checkpoint cp;
    cp.eval_count = std::stoull(fields[1]);
    cp.mean.resize(d);
    cp.variance.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      cp.mean[i] = std::stod(fields[2 + static_cast<std::size_t>(i)]);
      cp.variance[i] = std::stod(fields[2 + static_cast<std::size_t>(d + i)]);
    }
    const std::string& ev = fields.back();
    if (!ev.empty()) cp.log_evidence = std::stod(ev);
    run.summary.checkpoints.push_back(std::move(cp));
  }
  return run;
}

}  // namespace

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw std::runtime_error("box_stats: empty sample");
  std::sort(values.begin(), values.end());
  BoxStats out;
  out.q1 = quantile(values, 0.25);
  out.median = quantile(values, 0.5);
  out.q3 = quantile(values, 0.75);
  const double iqr = out.q3 - out.q1;
  const double lo_fence = out.q1 - 1.5 * iqr;
  const double hi_fence = out.q3 + 1.5 * iqr;
  out.whisker_lo = values.back();
  out.whisker_hi = values.front();
  for (double v : values) {
    if (v >= lo_fence) {
      out.whisker_lo = v;
      break;
    }
  }
  for (auto it = values.rbegin(); it != values.rend(); ++it) {
    if (*it <= hi_fence) {
      out.whisker_hi = *it;
      break;
    }
  }
  return out;
}

void write_report(const std::string& output_dir) {
  const fs::path dir(output_dir);
  std::ifstream sin(dir / "summary.json");
  if (!sin) throw std::runtime_error("no summary.json in " + output_dir);
  json summary;
  sin >> summary;

  GroundTruth truth;
  truth.mean = [&] {
    const auto& m = summary.at("truth").at("mean");
    Vector v(static_cast<Eigen::Index>(m.size()));
    for (std::size_t i = 0; i < m.size(); ++i) v[static_cast<Eigen::Index>(i)] = m[i];
    return v;
  }();
  truth.variance = [&] {
    const auto& m = summary.at("truth").at("variance");
    Vector v(static_cast<Eigen::Index>(m.size()));
    for (std::size_t i = 0; i < m.size(); ++i) v[static_cast<Eigen::Index>(i)] = m[i];
    return v;
  }();
  truth.source = summary.at("truth").at("source").get<std::string>();
  if (!summary.at("truth").at("log_evidence").is_null()) {
    truth.log_evidence = summary.at("truth").at("log_evidence").get<double>();
  }
  const Eigen::Index d = truth.mean.size();

  std::vector<LoadedRun> runs;
  for (const auto& r : summary.at("runs")) {
    if (!r.at("complete").get<bool>()) continue;
    char name[32];
    std::snprintf(name, sizeof(name), "run_%03d.csv", r.at("run_id").get<int>());
    if (!fs::exists(dir / name)) continue;
    runs.push_back(read_run_csv(dir / name, d));
  }
  if (runs.empty()) throw std::runtime_error("no complete runs in " + output_dir);

  std::vector<RunSummary> summaries;
  summaries.reserve(runs.size());
  for (const auto& run : runs) summaries.push_back(run.summary);

  // Curves need >= 2 runs; with a single run emit zero-variance columns.
  const std::size_t n_cp = summaries.front().checkpoints.size();
  {
    std::ofstream out(dir / "report_curves.csv");
    out << "eval_count,mean_bias2,mean_variance,mean_mse,var_bias2,var_variance,var_mse";
    for (Eigen::Index i = 1; i <= d; ++i) out << ",mean_mse_" << i;
    out << "\n";
    if (summaries.size() >= 2) {
      const AggregateCurves agg = aggregate_runs(summaries, truth);
      for (std::size_t cp = 0; cp < n_cp; ++cp) {
        const auto row = static_cast<Eigen::Index>(cp);
        out << agg.eval_counts[cp] << ',' << fmt17(agg.mean_estimate.pooled_bias2[row]) << ','
            << fmt17(agg.mean_estimate.pooled_variance[row]) << ','
            << fmt17(agg.mean_estimate.pooled_mse[row]) << ','
            << fmt17(agg.var_estimate.pooled_bias2[row]) << ','
            << fmt17(agg.var_estimate.pooled_variance[row]) << ','
            << fmt17(agg.var_estimate.pooled_mse[row]);
        for (Eigen::Index i = 0; i < d; ++i) out << ',' << fmt17(agg.mean_estimate.mse(row, i));
        out << '\n';
      }
    } else {
      const RunSummary& only = summaries.front();
      for (const Checkpoint& cp : only.checkpoints) {
        double bias2_m = 0.0, bias2_v = 0.0;
        Vector se(d);
        for (Eigen::Index i = 0; i < d; ++i) {
          const double em = cp.mean[i] - truth.mean[i];
          const double evd = cp.variance[i] - truth.variance[i];
          se[i] = em * em;
          bias2_m += em * em;
          bias2_v += evd * evd;
        }
        bias2_m /= static_cast<double>(d);
        bias2_v /= static_cast<double>(d);
        out << cp.eval_count << ',' << fmt17(bias2_m) << ",0," << fmt17(bias2_m) << ','
            << fmt17(bias2_v) << ",0," << fmt17(bias2_v);
        for (Eigen::Index i = 0; i < d; ++i) out << ',' << fmt17(se[i]);
        out << '\n';
      }
    }
  }

  {
    std::ofstream out(dir / "report_final.csv");
    out << "run_id,max_se";
    for (Eigen::Index i = 1; i <= d; ++i) out << ",se_mean_" << i;
    for (Eigen::Index i = 1; i <= d; ++i) out << ",se_var_" << i;
    out << "\n";
    for (const auto& run : runs) {
      const Checkpoint& last = run.summary.checkpoints.back();
      double worst = 0.0;
      Vector se_mean(d), se_var(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        const double em = last.mean[i] - truth.mean[i];
        const double ev = last.variance[i] - truth.variance[i];
        se_mean[i] = em * em;
        se_var[i] = ev * ev;
        worst = std::max({worst, se_mean[i], se_var[i]});
      }
      out << run.run_id << ',' << fmt17(worst);
      for (Eigen::Index i = 0; i < d; ++i) out << ',' << fmt17(se_mean[i]);
      for (Eigen::Index i = 0; i < d; ++i) out << ',' << fmt17(se_var[i]);
      out << '\n';
    }
  }

  {
    std::ofstream out(dir / "report_box.csv");
    out << "eval_count,q1,median,q3,whisker_lo,whisker_hi\n";
    for (std::size_t cp = 0; cp < n_cp; ++cp) {
      std::vector<double> pooled_se;
      pooled_se.reserve(summaries.size());
      for (const RunSummary& run : summaries) {
        const Checkpoint& c = run.checkpoints[cp];
        double acc = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) {
          const double em = c.mean[i] - truth.mean[i];
          acc += em * em;
        }
        pooled_se.push_back(acc / static_cast<double>(d));
      }
      const BoxStats bs = box_stats(pooled_se);
      out << summaries.front().checkpoints[cp].eval_count << ',' << fmt17(bs.q1) << ','
          << fmt17(bs.median) << ',' << fmt17(bs.q3) << ',' << fmt17(bs.whisker_lo) << ','
          << fmt17(bs.whisker_hi) << '\n';
    }
  }

  const bool have_evidence = std::all_of(
      summaries.begin(), summaries.end(), [](const RunSummary& r) {
        return !r.checkpoints.empty() && r.checkpoints.front().log_evidence.has_value();
      });
  if (have_evidence && truth.log_evidence) {
    std::ofstream out(dir / "report_evidence.csv");
    out << "eval_count,evidence_mse\n";
    for (std::size_t cp = 0; cp < n_cp; ++cp) {
      double acc = 0.0;
      for (const RunSummary& run : summaries) {
        const double err = *run.checkpoints[cp].log_evidence - *truth.log_evidence;
        acc += err * err;
      }
      out << summaries.front().checkpoints[cp].eval_count << ','
          << fmt17(acc / static_cast<double>(summaries.size())) << '\n';
    }
  }
}

}  // namespace gris::harness
