#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace driftlab {

/// Pairwise (tree) summation. Deterministic for a fixed input vector
/// regardless of how the values were produced, which keeps multi-worker
/// Monte Carlo runs bit-reproducible.
double pairwise_sum(std::span<const double> values);

struct MeanSe {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

/// Sample mean and standard error (sample std / sqrt(n)) via pairwise sums.
MeanSe mean_se(std::span<const double> values);

/// Mean and standard error of exp(x_i) computed in log space: the samples are
/// shifted by max(x) before exponentiation so the estimate survives large
/// exponents. Result is reported on the natural scale.
MeanSe exp_mean_se(std::span<const double> log_values);

/// Quantile of a sorted copy of the samples (linear interpolation).
double quantile(std::vector<double> values, double p);

}  // namespace driftlab
