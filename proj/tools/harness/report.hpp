#pragma once

#include <gris/diagnostics.hpp>

#include <string>
#include <vector>

namespace gris::harness {

/// Tukey box statistics of one sample: quartiles by linear interpolation,
/// whiskers at the most extreme points within 1.5 IQR of the box.
struct BoxStats {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;
};

BoxStats box_stats(std::vector<double> values);

/// Reads an experiment directory (summary.json + run_*.csv) and writes the
/// aggregate tables: report_curves.csv (bias^2 / variance / MSE per
/// checkpoint), report_final.csv (per-run final SE and MaxSE),
/// report_box.csv (box statistics of the pooled mean-SE across runs), and
/// report_evidence.csv when evidence estimates and a reference log Z exist.
void write_report(const std::string& output_dir);

}  // namespace gris::harness
