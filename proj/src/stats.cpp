#include "driftlab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "driftlab/errors.hpp"

namespace driftlab {

namespace {

double pairwise_sum_impl(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum_impl(v, half) + pairwise_sum_impl(v + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
    return pairwise_sum_impl(values.data(), values.size());
}

MeanSe mean_se(std::span<const double> values) {
    MeanSe out;
    out.n = values.size();
    if (out.n == 0) return out;
    out.mean = pairwise_sum(values) / static_cast<double>(out.n);
    if (out.n == 1) return out;
    std::vector<double> sq(out.n);
    for (std::size_t i = 0; i < out.n; ++i) {
        const double d = values[i] - out.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(out.n - 1);
    out.std_error = std::sqrt(var / static_cast<double>(out.n));
    return out;
}

MeanSe exp_mean_se(std::span<const double> log_values) {
    MeanSe out;
    out.n = log_values.size();
    if (out.n == 0) return out;
    const double shift = *std::max_element(log_values.begin(), log_values.end());
    std::vector<double> scaled(out.n);
    for (std::size_t i = 0; i < out.n; ++i) scaled[i] = std::exp(log_values[i] - shift);
    MeanSe inner = mean_se(scaled);
    const double factor = std::exp(shift);
    out.mean = factor * inner.mean;
    out.std_error = factor * inner.std_error;
    return out;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw ConfigError("quantile of empty sample");
    std::sort(values.begin(), values.end());
    const double pos = p * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * values[lo] + w * values[lo + 1];
}

}  // namespace driftlab
