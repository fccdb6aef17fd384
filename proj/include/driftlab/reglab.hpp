#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "driftlab/control.hpp"
#include "driftlab/dpe.hpp"
#include "driftlab/params.hpp"
#include "driftlab/rule.hpp"
#include "driftlab/state.hpp"

namespace driftlab {

struct GapEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo estimate of sup over grid times of E||kY - Y||^2 for the
/// coupled pair (shared Brownian increments, arrivals and marks; independent
/// perturbation stream).
GapEstimate coupled_gap(const DecisionRule& rule, const VecState& y0, long k,
                        std::size_t n_paths, const ModelParams& p, std::uint64_t master_seed,
                        const McOptions& opt = {});

struct RewardGapRow {
    long k = 0;
    double gap = 0.0;       ///< |E[exp(k_eta)] - E[exp(eta)]| paired estimate
    double std_error = 0.0; ///< standard error of the paired difference
    double reward_base = 0.0;
    double reward_reg = 0.0;
};

/// Paired reward gap per perturbation index, common random numbers across
/// the pair.
std::vector<RewardGapRow> reward_gap(const DecisionRule& rule, const VecState& y0,
                                     const std::vector<long>& k_list, std::size_t n_paths,
                                     const ModelParams& p, std::uint64_t master_seed,
                                     const McOptions& opt = {});

struct ExpMomentResult {
    double estimate = 0.0;
    double std_error = 0.0;
    double max_sample = 0.0;   ///< largest exponent (1+delta) k_eta observed
    double frac_nonfinite = 0.0;
    bool stable = true;        ///< false if more than 1% of exponents were non-finite
};

/// Diagnostic for the uniform exponential-moment assumption:
/// E[exp((1+delta) k_eta)] with heavy-tail flags.
ExpMomentResult exp_moment_diag(const DecisionRule& rule, const VecState& y0, double delta,
                                long k, std::size_t n_paths, const ModelParams& p,
                                std::uint64_t master_seed, const McOptions& opt = {});

struct EpsOptRow {
    long k = 0;
    double reward = 0.0;      ///< reward of the k-optimal rule on the unperturbed dynamics
    double reward_se = 0.0;
    double gap = 0.0;         ///< |V_hat - reward|
    double reg_value = 0.0;   ///< k-regularized lattice value at (0, y0)
};

struct EpsOptReport {
    double value_hat = 0.0;   ///< unregularized lattice value at (0, y0)
    std::vector<EpsOptRow> rows;
};

/// For each k: solve the regularized equation, extract its optimal rule,
/// evaluate that rule by Monte Carlo on the unperturbed dynamics, and
/// compare with the unregularized lattice value at (0, y0).
EpsOptReport eps_optimality(const ModelParams& p, const Grid2D& grid,
                            const std::vector<long>& k_list, std::size_t n_paths,
                            std::uint64_t master_seed, const DpeOptions& dpe_opt = {},
                            const McOptions& mc_opt = {});

/// Flat convergence study over a k-list, serialized as JSON and CSV.
struct ConvergenceReport {
    std::vector<long> k_values;
    std::vector<GapEstimate> l2_gaps;
    std::vector<RewardGapRow> reward_gaps;
    std::vector<ExpMomentResult> exp_moments;
    std::vector<EpsOptRow> eps_opt;  ///< empty unless the lattice study ran
    double value_hat = 0.0;          ///< unregularized value, 0 unless the lattice study ran
    double delta = 0.5;
    std::string rule_kind;
};

void write_convergence_report(const ConvergenceReport& rep, const std::string& json_file,
                              const std::string& csv_file);

}  // namespace driftlab
