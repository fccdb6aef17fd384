#pragma once

#include <cstdint>
#include <optional>

#include "driftlab/params.hpp"
#include "driftlab/rule.hpp"
#include "driftlab/state.hpp"

namespace driftlab {

struct EtaSummary {
    double min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
};

/// Monte Carlo estimate of a reward-type expectation.
struct RewardEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::size_t n_rejected = 0;
    EtaSummary eta;  ///< summary of the integrated running reward samples
};

struct McOptions {
    int n_steps = 2000;  ///< base grid steps over the simulated horizon
    int workers = 1;
    double max_reject_fraction = 0.001;
};

/// Integrated running reward along a simulated path (trapezoid on the path
/// grid, left limits at arrival points).
double eta_trapezoid(const StatePath& path, const DecisionRule& rule, const ModelParams& p);

/// E[exp(eta)] under the changed measure for a Markov rule started at
/// (t0, y0). Non-finite samples are rejected and counted; more than
/// max_reject_fraction of them invalidates the run (StatisticalError).
RewardEstimate reward_mc(const DecisionRule& rule, double t0, const VecState& y0,
                         std::size_t n_paths, const ModelParams& p,
                         const std::optional<RegularizationConfig>& cfg,
                         std::uint64_t master_seed, const McOptions& opt = {});

/// Direct expected power utility of terminal wealth under the physical
/// measure: hidden drift and returns simulated, the filter run online, the
/// rule applied to the filter state, log-wealth integrated from the return
/// increments. The eta summary holds theta * log-return samples.
RewardEstimate wealth_utility_mc(const DecisionRule& rule, const ModelParams& p,
                                 std::size_t n_paths, std::uint64_t master_seed,
                                 const McOptions& opt = {});

struct MartingaleCheck {
    double mean = 0.0;
    double std_error = 0.0;
    bool pass = false;  ///< |mean - 1| <= 3 std_error
};

/// Monte Carlo check that the measure-change density has unit expectation
/// for the given (clipped, hence admissible) rule.
MartingaleCheck lambda_martingale_check(const DecisionRule& rule, const ModelParams& p,
                                        std::size_t n_paths, std::uint64_t master_seed,
                                        const McOptions& opt = {});

/// Map a risk-sensitive value back to the original utility scale:
/// (x0^theta / theta) * V0.
double original_value(double x0, double theta, double v0);

/// Paired comparison of the two routes to the same expectation: direct
/// utility simulation vs (x0^theta/theta) E[exp eta], with common random
/// numbers through shared stream names.
struct IdentityCheck {
    RewardEstimate wealth;
    RewardEstimate reward_scaled;  ///< reward route scaled by x0^theta/theta
    double diff_mean = 0.0;
    double diff_se = 0.0;
    bool pass = false;  ///< |diff_mean| <= 3 diff_se
};
IdentityCheck measure_change_identity(const DecisionRule& rule, const ModelParams& p,
                                      std::size_t n_paths, std::uint64_t master_seed,
                                      const McOptions& opt = {});

}  // namespace driftlab
