#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace driftlab {

/// Named, counter-indexed random stream.
///
/// Every stream is derived from (master_seed, name, counter). Streams with
/// different names or counters are statistically independent, and adding a
/// new stream name never perturbs draws of existing streams. Typical usage:
/// one stream per noise source per path, with the path index as counter.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::string_view name, std::uint64_t counter = 0);

    /// Uniform draw on (0, 1), endpoints excluded.
    double uniform();

    /// Standard normal draw (Box-Muller, pair cached).
    double normal();

    /// Vector of n independent standard normals.
    Eigen::VectorXd normal_vector(Eigen::Index n);

    /// Exponential draw with the given rate (mean 1/rate).
    double exponential(double rate);

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

/// Stable 64-bit hash of a stream name (FNV-1a).
std::uint64_t hash_name(std::string_view name);

/// SplitMix64 finalizer used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x);

namespace stream {
// Canonical stream names. Reusing a name across simulations running from the
// same (master_seed, path counter) yields common random numbers.
inline constexpr std::string_view return_noise = "W_R";
inline constexpr std::string_view drift_noise = "W_mu";
inline constexpr std::string_view arrivals = "arrivals";
inline constexpr std::string_view views = "views";
inline constexpr std::string_view perturbation = "W_star";
}  // namespace stream

}  // namespace driftlab
