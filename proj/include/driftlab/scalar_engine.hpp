#pragma once

#include <cstdint>
#include <optional>

#include "driftlab/params.hpp"
#include "driftlab/rule.hpp"
#include "driftlab/state.hpp"

namespace driftlab {

/// Single-asset simulation kernel. Mirrors the general-dimension engines
/// (simulate_state, simulate_bundle + run_filter) with plain scalar
/// arithmetic, consuming the named random streams in the same order so the
/// two implementations produce common random numbers and can be
/// cross-checked against each other.
class ScalarEngine {
public:
    ScalarEngine(const ModelParams& p, std::optional<RegularizationConfig> cfg);

    /// Integrated running reward of one changed-measure state path.
    double run_eta(double m0, double q0, const DecisionRule& rule, double t0, int n_steps,
                   std::uint64_t master_seed, std::uint64_t path_index) const;

    struct CoupledResult {
        double gap_sq_max = 0.0;  ///< sup over grid times of the squared max-norm gap
        double eta_base = 0.0;    ///< eta along the unregularized path
        double eta_reg = 0.0;     ///< eta along the regularized path
    };
    /// Twin run of the unregularized and regularized state on shared noise
    /// (Brownian increments, arrivals, marks); the perturbation stream only
    /// drives the regularized path. Requires a config with k.
    CoupledResult run_coupled(double m0, double q0, const DecisionRule& rule, double t0,
                              int n_steps, std::uint64_t master_seed,
                              std::uint64_t path_index) const;

    struct WealthResult {
        double log_return = 0.0;   ///< log X_T - log x0 for the applied rule
        double log_density = 0.0;  ///< log of the measure-change density at T
    };
    /// Physical-measure run: hidden drift, returns, online filter, wealth.
    WealthResult run_wealth(const DecisionRule& rule, int n_steps, std::uint64_t master_seed,
                            std::uint64_t path_index) const;

private:
    double riccati_rhs1(double q) const { return smu_ - 2.0 * kap_ * q - q * sig_inv_ * q; }
    double riccati_step1(double q, double h) const;

    double sig_, sig_inv_, sig_inv_sqrt_, sigma_r_, sigma_x_;
    double kap_, mubar_, smu_, gamma_, lam_, theta_, T_;
    double kg_ = 0.0, eps_ = 0.0, scale_ = 0.0;
    double prior_m_, prior_q_;
    bool regularized_ = false;
};

}  // namespace driftlab
