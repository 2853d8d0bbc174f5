#pragma once

#include <gris/rng.hpp>
#include <gris/types.hpp>

#include <vector>

namespace gris {

enum class ResampleScheme { kMultinomial, kSystematic };

/// Normalized weights from log-weights via max-shift exponentiation.
/// Throws DegeneratePopulation if every entry is -inf, ContractViolation on
/// NaN or an empty vector.
Vector normalize_log_weights(const Vector& log_weights);

/// `count` ancestor indices drawn iid from categorical(normalize(log_weights)).
std::vector<int> multinomial_resample(const Vector& log_weights, int count, RngStream& rng);

/// Systematic resampling: one uniform offset u ~ U[0, 1/count), positions
/// u + j/count walked against the cumulative weights. The count of index j is
/// count*w_j rounded to one of its two neighbours, so integral expectations
/// are hit exactly for any u.
std::vector<int> systematic_resample(const Vector& log_weights, int count, RngStream& rng);

std::vector<int> resample(ResampleScheme scheme, const Vector& log_weights, int count,
                          RngStream& rng);

}  // namespace gris
