#include "driftlab/reglab.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "driftlab/csv.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/scalar_engine.hpp"
#include "driftlab/stats.hpp"
#include "driftlab/threads.hpp"

namespace driftlab {

using nlohmann::json;

namespace {

RegularizationConfig cfg_for(const ModelParams& p, long k) {
    return RegularizationConfig::defaults(p, k);
}

// General-dimension coupled pair on one shared noise bundle.
double coupled_gap_one_path(const DecisionRule& rule, const VecState& y0,
                            const RegularizationConfig& cfg, const ModelParams& p,
                            std::uint64_t seed, std::uint64_t idx, int n_steps) {
    NoiseBundle nb = make_noise_bundle(p, 0.0, n_steps, seed, idx, true);
    StatePath base = simulate_state(y0, rule, nb, std::nullopt, p);
    StatePath reg = simulate_state(y0, rule, nb, cfg, p);
    double worst = 0.0;
    for (std::size_t i = 0; i < base.times.size(); ++i) {
        const double gm = (reg.states[i].m - base.states[i].m).cwiseAbs().maxCoeff();
        const double gg = (reg.states[i].g - base.states[i].g).cwiseAbs().maxCoeff();
        const double gap = std::max(gm, gg);
        worst = std::max(worst, gap * gap);
    }
    return worst;
}

}  // namespace

GapEstimate coupled_gap(const DecisionRule& rule, const VecState& y0, long k,
                        std::size_t n_paths, const ModelParams& p, std::uint64_t master_seed,
                        const McOptions& opt) {
    if (n_paths == 0) throw ConfigError("coupled_gap: need at least one path");
    const RegularizationConfig cfg = cfg_for(p, k);
    std::vector<double> gaps(n_paths);
    if (p.d == 1) {
        const ScalarEngine engine(p, cfg);
        parallel_for(n_paths, opt.workers, [&](std::size_t i) {
            gaps[i] = engine
                          .run_coupled(y0.m[0], y0.g[0], rule, 0.0, opt.n_steps, master_seed,
                                       static_cast<std::uint64_t>(i))
                          .gap_sq_max;
        });
    } else {
        parallel_for(n_paths, opt.workers, [&](std::size_t i) {
            gaps[i] = coupled_gap_one_path(rule, y0, cfg, p, master_seed,
                                           static_cast<std::uint64_t>(i), opt.n_steps);
        });
    }
    MeanSe ms = mean_se(gaps);
    return GapEstimate{ms.mean, ms.std_error};
}

std::vector<RewardGapRow> reward_gap(const DecisionRule& rule, const VecState& y0,
                                     const std::vector<long>& k_list, std::size_t n_paths,
                                     const ModelParams& p, std::uint64_t master_seed,
                                     const McOptions& opt) {
    if (p.d != 1) throw ConfigError("reward_gap: single-asset only");
    std::vector<RewardGapRow> rows;
    for (long k : k_list) {
        const RegularizationConfig cfg = cfg_for(p, k);
        const ScalarEngine engine(p, cfg);
        std::vector<double> diff(n_paths), base(n_paths), reg(n_paths);
        parallel_for(n_paths, opt.workers, [&](std::size_t i) {
            const auto pair = engine.run_coupled(y0.m[0], y0.g[0], rule, 0.0, opt.n_steps,
                                                 master_seed, static_cast<std::uint64_t>(i));
            base[i] = std::exp(pair.eta_base);
            reg[i] = std::exp(pair.eta_reg);
            diff[i] = reg[i] - base[i];
        });
        MeanSe md = mean_se(diff);
        RewardGapRow row;
        row.k = k;
        row.gap = std::abs(md.mean);
        row.std_error = md.std_error;
        row.reward_base = mean_se(base).mean;
        row.reward_reg = mean_se(reg).mean;
        rows.push_back(row);
    }
    return rows;
}

ExpMomentResult exp_moment_diag(const DecisionRule& rule, const VecState& y0, double delta,
                                long k, std::size_t n_paths, const ModelParams& p,
                                std::uint64_t master_seed, const McOptions& opt) {
    if (delta <= 0.0) throw ConfigError("exp_moment_diag: delta must be positive");
    if (p.d != 1) throw ConfigError("exp_moment_diag: single-asset only");
    const RegularizationConfig cfg = cfg_for(p, k);
    const ScalarEngine engine(p, cfg);
    std::vector<double> exponents(n_paths);
    parallel_for(n_paths, opt.workers, [&](std::size_t i) {
        const double eta = engine.run_eta(y0.m[0], y0.g[0], rule, 0.0, opt.n_steps, master_seed,
                                          static_cast<std::uint64_t>(i));
        exponents[i] = (1.0 + delta) * eta;
    });
    ExpMomentResult out;
    std::vector<double> finite;
    finite.reserve(n_paths);
    for (double e : exponents) {
        if (std::isfinite(e))
            finite.push_back(e);
        else
            out.frac_nonfinite += 1.0;
    }
    out.frac_nonfinite /= static_cast<double>(n_paths);
    out.stable = out.frac_nonfinite <= 0.01;
    if (finite.empty()) throw StatisticalError("exp_moment_diag: all exponents non-finite");
    MeanSe ms = exp_mean_se(finite);
    out.estimate = ms.mean;
    out.std_error = ms.std_error;
    out.max_sample = *std::max_element(finite.begin(), finite.end());
    return out;
}

EpsOptReport eps_optimality(const ModelParams& p, const Grid2D& grid,
                            const std::vector<long>& k_list, std::size_t n_paths,
                            std::uint64_t master_seed, const DpeOptions& dpe_opt,
                            const McOptions& mc_opt) {
    if (p.d != 1) throw ConfigError("eps_optimality: single-asset only");
    EpsOptReport rep;
    DpeOptions base_opt = dpe_opt;
    base_opt.reg_k.reset();
    const ValueGrid base = solve_dpe(p, grid, base_opt);
    rep.value_hat = base.value_at(0.0, p.m0[0], p.q0(0, 0));
    const VecState y0 = VecState::from_filter(p.m0, p.q0);
    for (long k : k_list) {
        DpeOptions reg_opt = dpe_opt;
        reg_opt.reg_k = k;
        ValueGrid reg;
        try {
            reg = solve_dpe(p, grid, reg_opt);
        } catch (const Error& e) {
            throw NumericalError("eps_optimality at k=" + std::to_string(k) + ": " + e.what());
        }
        const DecisionRule rule_k = optimal_rule(reg);
        const RewardEstimate est =
            reward_mc(rule_k, 0.0, y0, n_paths, p, std::nullopt, master_seed, mc_opt);
        EpsOptRow row;
        row.k = k;
        row.reward = est.mean;
        row.reward_se = est.std_error;
        row.gap = std::abs(rep.value_hat - est.mean);
        row.reg_value = reg.value_at(0.0, p.m0[0], p.q0(0, 0));
        rep.rows.push_back(row);
    }
    return rep;
}

void write_convergence_report(const ConvergenceReport& rep, const std::string& json_file,
                              const std::string& csv_file) {
    json j;
    j["rule_kind"] = rep.rule_kind;
    j["delta"] = rep.delta;
    j["k_values"] = rep.k_values;
    json l2 = json::array(), rg = json::array(), em = json::array();
    for (const auto& g : rep.l2_gaps) l2.push_back({{"estimate", g.mean}, {"std_error", g.std_error}});
    for (const auto& r : rep.reward_gaps)
        rg.push_back({{"k", r.k},
                      {"estimate", r.gap},
                      {"std_error", r.std_error},
                      {"reward_base", r.reward_base},
                      {"reward_reg", r.reward_reg}});
    for (const auto& e : rep.exp_moments)
        em.push_back({{"estimate", e.estimate},
                      {"std_error", e.std_error},
                      {"max_sample", e.max_sample},
                      {"frac_nonfinite", e.frac_nonfinite},
                      {"stable", e.stable}});
    j["l2_gaps"] = l2;
    j["reward_gaps"] = rg;
    j["exp_moments"] = em;
    if (!rep.eps_opt.empty()) {
        j["value_hat"] = rep.value_hat;
        json eo = json::array();
        for (const auto& r : rep.eps_opt)
            eo.push_back({{"k", r.k},
                          {"reward", r.reward},
                          {"reward_se", r.reward_se},
                          {"gap", r.gap},
                          {"reg_value", r.reg_value}});
        j["eps_opt"] = eo;
    }
    std::ofstream out(json_file);
    if (!out) throw ConfigError("cannot write report: " + json_file);
    out << j.dump(2) << '\n';

    CsvWriter csv(csv_file, {"k", "metric", "estimate", "std_error"});
    for (std::size_t i = 0; i < rep.k_values.size(); ++i) {
        const double k = static_cast<double>(rep.k_values[i]);
        if (i < rep.l2_gaps.size())
            csv.row_mixed({fmt17(k), "l2_gap", fmt17(rep.l2_gaps[i].mean),
                           fmt17(rep.l2_gaps[i].std_error)});
        if (i < rep.reward_gaps.size())
            csv.row_mixed({fmt17(k), "reward_gap", fmt17(rep.reward_gaps[i].gap),
                           fmt17(rep.reward_gaps[i].std_error)});
        if (i < rep.exp_moments.size())
            csv.row_mixed({fmt17(k), "exp_moment", fmt17(rep.exp_moments[i].estimate),
                           fmt17(rep.exp_moments[i].std_error)});
        if (i < rep.eps_opt.size())
            csv.row_mixed({fmt17(k), "eps_opt_gap", fmt17(rep.eps_opt[i].gap),
                           fmt17(rep.eps_opt[i].reward_se)});
    }
}

}  // namespace driftlab
