#include <gris/resample.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gris {

Vector normalize_log_weights(const Vector& log_weights) {
  if (log_weights.size() == 0) {
    throw ContractViolation("normalize_log_weights: empty weight vector");
  }
  double max_lw = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < log_weights.size(); ++i) {
    const double lw = log_weights[i];
    if (std::isnan(lw)) throw ContractViolation("normalize_log_weights: NaN log-weight");
    if (lw == std::numeric_limits<double>::infinity()) {
      throw ContractViolation("normalize_log_weights: +inf log-weight");
    }
    max_lw = std::max(max_lw, lw);
  }
  if (max_lw == -std::numeric_limits<double>::infinity()) {
    throw DegeneratePopulation("normalize_log_weights: all log-weights are -inf");
  }
  Vector w = (log_weights.array() - max_lw).exp();
  w /= w.sum();
  return w;
}

std::vector<int> multinomial_resample(const Vector& log_weights, int count, RngStream& rng) {
  if (count < 1) throw ContractViolation("multinomial_resample: count must be >= 1");
  const Vector w = normalize_log_weights(log_weights);
  const Eigen::Index n = w.size();
  Vector cumulative(n);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += w[i];
    cumulative[i] = acc;
  }
  cumulative[n - 1] = 1.0;

  std::vector<int> indices(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    const double u = rng.uniform();
    // First index whose cumulative weight strictly exceeds u; zero-weight
    // entries never satisfy this, so they cannot be selected.
    const double* it = std::upper_bound(cumulative.data(), cumulative.data() + n, u);
    indices[static_cast<std::size_t>(j)] =
        static_cast<int>(std::min<Eigen::Index>(it - cumulative.data(), n - 1));
  }
  return indices;
}

std::vector<int> systematic_resample(const Vector& log_weights, int count, RngStream& rng) {
  if (count < 1) throw ContractViolation("systematic_resample: count must be >= 1");
  const Vector w = normalize_log_weights(log_weights);
  const Eigen::Index n = w.size();
  const double step = 1.0 / static_cast<double>(count);
  const double offset = rng.uniform() * step;

  // Cap the walk at the last positive weight so rounding in the cumulative
  // sum can never select a zero-weight index.
  Eigen::Index last_pos = n - 1;
  while (last_pos > 0 && w[last_pos] == 0.0) --last_pos;

  std::vector<int> indices(static_cast<std::size_t>(count));
  Eigen::Index i = 0;
  double cumulative = w[0];
  for (int j = 0; j < count; ++j) {
    const double u = offset + static_cast<double>(j) * step;
    while (u >= cumulative && i < last_pos) {
      ++i;
      cumulative += w[i];
    }
    indices[static_cast<std::size_t>(j)] = static_cast<int>(i);
  }
  return indices;
}

std::vector<int> resample(ResampleScheme scheme, const Vector& log_weights, int count,
                          RngStream& rng) {
  switch (scheme) {
    case ResampleScheme::kMultinomial:
      return multinomial_resample(log_weights, count, rng);
    case ResampleScheme::kSystematic:
      return systematic_resample(log_weights, count, rng);
  }
  throw ContractViolation("resample: unknown scheme");
}

}  // namespace gris
