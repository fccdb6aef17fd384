#include "driftlab/rng.hpp"

#include <cmath>

#include "driftlab/errors.hpp"

namespace driftlab {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_name(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RngStream::RngStream(std::uint64_t master_seed, std::string_view name, std::uint64_t counter) {
    const std::uint64_t a = mix64(master_seed ^ hash_name(name));
    const std::uint64_t b = mix64(a ^ counter);
    std::seed_seq seq{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32)};
    engine_.seed(seq);
}

double RngStream::uniform() {
    // 53-bit mantissa, shifted into (0,1).
    const std::uint64_t r = engine_() >> 11;
    double u = (static_cast<double>(r) + 0.5) * 0x1.0p-53;
    return u;
}

double RngStream::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_normal_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
}

Eigen::VectorXd RngStream::normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
}

double RngStream::exponential(double rate) {
    if (rate <= 0.0) throw ConfigError("exponential draw requires a positive rate");
    return -std::log(uniform()) / rate;
}

}  // namespace driftlab
