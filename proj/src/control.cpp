#include "driftlab/control.hpp"

#include <cmath>

#include "driftlab/errors.hpp"
#include "driftlab/filter.hpp"
#include "driftlab/market.hpp"
#include "driftlab/scalar_engine.hpp"
#include "driftlab/stats.hpp"
#include "driftlab/threads.hpp"

namespace driftlab {

namespace {

EtaSummary summarize(std::vector<double> samples) {
    EtaSummary s;
    if (samples.empty()) return s;
    s.min = *std::min_element(samples.begin(), samples.end());
    s.max = *std::max_element(samples.begin(), samples.end());
    s.q25 = quantile(samples, 0.25);
    s.median = quantile(samples, 0.5);
    s.q75 = quantile(samples, 0.75);
    return s;
}

// Collect per-path log samples, reject non-finite ones, and convert to a
// RewardEstimate on the natural scale (scaled by `factor`).
RewardEstimate reduce_exp_samples(std::vector<double>& log_samples, double factor,
                                  double max_reject_fraction) {
    RewardEstimate est;
    std::vector<double> kept;
    kept.reserve(log_samples.size());
    for (double v : log_samples) {
        if (std::isfinite(v))
            kept.push_back(v);
        else
            ++est.n_rejected;
    }
    est.n_paths = kept.size();
    if (kept.empty()) throw StatisticalError("Monte Carlo run produced no finite samples");
    if (static_cast<double>(est.n_rejected) >
        max_reject_fraction * static_cast<double>(log_samples.size()))
        throw StatisticalError("Monte Carlo rejection rate above " +
                               std::to_string(max_reject_fraction));
    MeanSe ms = exp_mean_se(kept);
    est.mean = factor * ms.mean;
    est.std_error = std::abs(factor) * ms.std_error;
    est.eta = summarize(std::move(kept));
    return est;
}

}  // namespace

double eta_trapezoid(const StatePath& path, const DecisionRule& rule, const ModelParams& p) {
    const std::size_t n = path.times.size();
    if (n < 2) return 0.0;
    double eta = 0.0;
    double b_left = running_reward_b(path.states[0], rule.eval(path.times[0], path.states[0]), p);
    for (std::size_t i = 1; i < n; ++i) {
        const double h = path.times[i] - path.times[i - 1];
        auto pre = path.pre_jump.find(static_cast<Eigen::Index>(i));
        const VecState& right = (pre != path.pre_jump.end()) ? pre->second : path.states[i];
        const double b_right = running_reward_b(right, rule.eval(path.times[i], right), p);
        eta += 0.5 * (b_left + b_right) * h;
        b_left = running_reward_b(path.states[i], rule.eval(path.times[i], path.states[i]), p);
    }
    return eta;
}

RewardEstimate reward_mc(const DecisionRule& rule, double t0, const VecState& y0,
                         std::size_t n_paths, const ModelParams& p,
                         const std::optional<RegularizationConfig>& cfg,
                         std::uint64_t master_seed, const McOptions& opt) {
    if (n_paths == 0) throw ConfigError("reward_mc: need at least one path");
    const bool with_star = cfg.has_value() && cfg->k.has_value();
    std::vector<double> etas(n_paths);
    if (p.d == 1) {
        const ScalarEngine engine(p, cfg);
        parallel_for(n_paths, opt.workers, [&](std::size_t i) {
            etas[i] = engine.run_eta(y0.m[0], y0.g[0], rule, t0, opt.n_steps, master_seed,
                                     static_cast<std::uint64_t>(i));
        });
    } else {
        parallel_for(n_paths, opt.workers, [&](std::size_t i) {
            NoiseBundle nb = make_noise_bundle(p, t0, opt.n_steps, master_seed,
                                               static_cast<std::uint64_t>(i), with_star);
            StatePath path = simulate_state(y0, rule, nb, cfg, p);
            etas[i] = eta_trapezoid(path, rule, p);
        });
    }
    return reduce_exp_samples(etas, 1.0, opt.max_reject_fraction);
}

RewardEstimate wealth_utility_mc(const DecisionRule& rule, const ModelParams& p,
                                 std::size_t n_paths, std::uint64_t master_seed,
                                 const McOptions& opt) {
    if (n_paths == 0) throw ConfigError("wealth_utility_mc: need at least one path");
    std::vector<double> theta_logret(n_paths);
    if (p.d == 1) {
        const ScalarEngine engine(p, std::nullopt);
        parallel_for(n_paths, opt.workers, [&](std::size_t i) {
            const auto w = engine.run_wealth(rule, opt.n_steps, master_seed,
                                             static_cast<std::uint64_t>(i));
            theta_logret[i] = p.theta * w.log_return;
        });
    } else {
        parallel_for(n_paths, opt.workers, [&](std::size_t i) {
            PathBundle b = simulate_bundle(p, master_seed, static_cast<std::uint64_t>(i), opt.n_steps);
            FilterPath f = run_filter(b, p.m0, p.q0, p);
            double logret = 0.0;
            // Filter rows at arrivals: use the post-update state at the left
            // endpoint of each step. Walk rows skipping pre-update entries.
            std::size_t row = 0;
            for (Eigen::Index i_step = 0; i_step < b.steps(); ++i_step) {
                while (f.flags[row] == 1) ++row;  // skip pre-update duplicates
                const double t = b.grid[static_cast<std::size_t>(i_step)];
                const double h = b.grid[static_cast<std::size_t>(i_step) + 1] - t;
                VecState y = VecState::from_filter(f.means[row], f.covs[row]);
                const Eigen::VectorXd ctrl = rule.eval(t, y);
                const Eigen::VectorXd d_ret =
                    (b.return_path.row(i_step + 1) - b.return_path.row(i_step)).transpose();
                logret += ctrl.dot(d_ret) - 0.5 * (p.sigma_X() * ctrl).squaredNorm() * h;
                ++row;
            }
            theta_logret[i] = p.theta * logret;
        });
    }
    const double factor = std::pow(p.x0, p.theta) / p.theta;
    return reduce_exp_samples(theta_logret, factor, opt.max_reject_fraction);
}

MartingaleCheck lambda_martingale_check(const DecisionRule& rule, const ModelParams& p,
                                        std::size_t n_paths, std::uint64_t master_seed,
                                        const McOptions& opt) {
    if (n_paths == 0) throw ConfigError("lambda_martingale_check: need at least one path");
    std::vector<double> log_density(n_paths);
    if (p.d == 1) {
        const ScalarEngine engine(p, std::nullopt);
        parallel_for(n_paths, opt.workers, [&](std::size_t i) {
            log_density[i] =
                engine.run_wealth(rule, opt.n_steps, master_seed, static_cast<std::uint64_t>(i))
                    .log_density;
        });
    } else {
        parallel_for(n_paths, opt.workers, [&](std::size_t i) {
            PathBundle b = simulate_bundle(p, master_seed, static_cast<std::uint64_t>(i), opt.n_steps);
            FilterPath f = run_filter(b, p.m0, p.q0, p);
            double acc = 0.0;
            std::size_t row = 0;
            for (Eigen::Index i_step = 0; i_step < b.steps(); ++i_step) {
                while (f.flags[row] == 1) ++row;
                const double t = b.grid[static_cast<std::size_t>(i_step)];
                const double h = b.grid[static_cast<std::size_t>(i_step) + 1] - t;
                VecState y = VecState::from_filter(f.means[row], f.covs[row]);
                const Eigen::VectorXd ctrl = rule.eval(t, y);
                const Eigen::VectorXd d_ret =
                    (b.return_path.row(i_step + 1) - b.return_path.row(i_step)).transpose();
                const Eigen::VectorXd innov =
                    p.Sigma_R_inv_sqrt() * (d_ret - f.means[row] * h);
                const Eigen::VectorXd vol_ctrl = p.sigma_X() * ctrl;
                acc += p.theta * vol_ctrl.dot(innov) -
                       0.5 * p.theta * p.theta * vol_ctrl.squaredNorm() * h;
                ++row;
            }
            log_density[i] = acc;
        });
    }
    MeanSe ms = exp_mean_se(log_density);
    MartingaleCheck out;
    out.mean = ms.mean;
    out.std_error = ms.std_error;
    out.pass = std::abs(ms.mean - 1.0) <= 3.0 * ms.std_error;
    return out;
}

double original_value(double x0, double theta, double v0) {
    if (x0 <= 0.0) throw ConfigError("original_value: x0 must be positive");
    if (v0 <= 0.0) throw ConfigError("original_value: V0 must be positive");
    return std::pow(x0, theta) / theta * v0;
}

IdentityCheck measure_change_identity(const DecisionRule& rule, const ModelParams& p,
                                      std::size_t n_paths, std::uint64_t master_seed,
                                      const McOptions& opt) {
    IdentityCheck out;
    out.wealth = wealth_utility_mc(rule, p, n_paths, master_seed, opt);
    VecState y0 = VecState::from_filter(p.m0, p.q0);
    out.reward_scaled = reward_mc(rule, 0.0, y0, n_paths, p, std::nullopt, master_seed, opt);
    const double factor = std::pow(p.x0, p.theta) / p.theta;
    out.reward_scaled.mean *= factor;
    out.reward_scaled.std_error *= std::abs(factor);

    // Paired difference with common random numbers (shared stream names).
    std::vector<double> diff(n_paths);
    if (p.d == 1) {
        const ScalarEngine engine(p, std::nullopt);
        parallel_for(n_paths, opt.workers, [&](std::size_t i) {
            const auto w = engine.run_wealth(rule, opt.n_steps, master_seed,
                                             static_cast<std::uint64_t>(i));
            const double eta = engine.run_eta(p.m0[0], p.q0(0, 0), rule, 0.0, opt.n_steps,
                                              master_seed, static_cast<std::uint64_t>(i));
            diff[i] = factor * (std::exp(p.theta * w.log_return) - std::exp(eta));
        });
    } else {
        throw ConfigError("measure_change_identity: paired comparison is single-asset only");
    }
    MeanSe ms = mean_se(diff);
    out.diff_mean = ms.mean;
    out.diff_se = ms.std_error;
    out.pass = std::abs(ms.mean) <= 3.0 * ms.std_error;
    return out;
}

}  // namespace driftlab
