#include "driftlab/scalar_engine.hpp"

#include <algorithm>
#include <cmath>

#include "driftlab/errors.hpp"
#include "driftlab/market.hpp"

namespace driftlab {

namespace {

struct ScalarNoise {
    std::vector<double> grid;
    std::vector<double> dW;              // per step
    std::vector<int> mark_index;         // per grid point, -1 if no arrival
    std::vector<double> marks;
    std::vector<double> star_m, star_g;  // per step, empty unless perturbed
};

// Same stream names and consumption order as make_noise_bundle, so the
// scalar and general engines see identical draws.
ScalarNoise draw_noise(double lambda, double T, double t0, int n_steps, std::uint64_t seed,
                       std::uint64_t idx, bool with_star) {
    ScalarNoise sn;
    RngStream arrivals_rng(seed, stream::arrivals, idx);
    std::vector<double> all = simulate_arrivals(lambda, T, arrivals_rng);
    std::vector<double> shifted;
    for (double a : all)
        if (a > t0) shifted.push_back(a - t0);
    std::vector<double> grid = make_grid(T - t0, n_steps, shifted);
    sn.grid.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) sn.grid[i] = t0 + grid[i];
    sn.grid.front() = t0;
    sn.grid.back() = T;
    const std::size_t n = sn.grid.size() - 1;

    RngStream w_rng(seed, stream::return_noise, idx);
    sn.dW.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        sn.dW[i] = std::sqrt(sn.grid[i + 1] - sn.grid[i]) * w_rng.normal();

    RngStream mark_rng(seed, stream::views, idx);
    sn.mark_index.assign(n + 1, -1);
    const double tol = 1e-12 * T;
    for (double a : shifted) {
        const double t = t0 + a;
        auto it = std::lower_bound(sn.grid.begin(), sn.grid.end(), t - tol);
        sn.mark_index[static_cast<std::size_t>(it - sn.grid.begin())] =
            static_cast<int>(sn.marks.size());
        sn.marks.push_back(mark_rng.normal());
    }

    if (with_star) {
        RngStream star_rng(seed, stream::perturbation, idx);
        sn.star_m.resize(n);
        sn.star_g.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double sh = std::sqrt(sn.grid[i + 1] - sn.grid[i]);
            sn.star_m[i] = sh * star_rng.normal();
            sn.star_g[i] = sh * star_rng.normal();
        }
    }
    return sn;
}

inline double reward_b1(double theta, double sig, double m, double ctrl) {
    return theta * (ctrl * m - 0.5 * (1.0 - theta) * sig * ctrl * ctrl);
}

}  // namespace

ScalarEngine::ScalarEngine(const ModelParams& p, std::optional<RegularizationConfig> cfg) {
    if (p.d != 1) throw ConfigError("ScalarEngine: single-asset only");
    sig_ = p.Sigma_R()(0, 0);
    sig_inv_ = p.Sigma_R_inv()(0, 0);
    sig_inv_sqrt_ = p.Sigma_R_inv_sqrt()(0, 0);
    sigma_r_ = p.sigma_R(0, 0);
    sigma_x_ = p.sigma_X()(0, 0);
    kap_ = p.kappa(0, 0);
    mubar_ = p.mu_bar[0];
    smu_ = p.Sigma_mu()(0, 0);
    gamma_ = p.Gamma(0, 0);
    lam_ = p.lambda;
    theta_ = p.theta;
    T_ = p.T;
    kg_ = p.state_ball_radius();
    prior_m_ = p.m0[0];
    prior_q_ = p.q0(0, 0);
    if (cfg && cfg->k) {
        cfg->validate(p);
        regularized_ = true;
        eps_ = cfg->epsilon;
        scale_ = 1.0 / std::sqrt(static_cast<double>(*cfg->k));
    }
}

double ScalarEngine::riccati_step1(double q, double h) const {
    auto once = [&](double x, double hh) {
        const double k1 = riccati_rhs1(x);
        const double k2 = riccati_rhs1(x + 0.5 * hh * k1);
        const double k3 = riccati_rhs1(x + 0.5 * hh * k2);
        const double k4 = riccati_rhs1(x + hh * k3);
        double out = x + (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (out < -1e-8) throw NumericalError("scalar covariance flow lost positivity");
        return std::max(out, 0.0);
    };
    if (h == 0.0) return q;
    if (std::abs(riccati_rhs1(q)) * h > 0.1 * std::abs(q)) {
        double out = q;
        for (int i = 0; i < 4; ++i) out = once(out, h / 4.0);
        return out;
    }
    return once(q, h);
}

double ScalarEngine::run_eta(double m0, double q0, const DecisionRule& rule, double t0,
                             int n_steps, std::uint64_t master_seed,
                             std::uint64_t path_index) const {
    const ScalarNoise sn = draw_noise(lam_, T_, t0, n_steps, master_seed, path_index, regularized_);
    const std::size_t n = sn.grid.size() - 1;
    double m = m0, q = q0, eta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = sn.grid[i];
        const double h = sn.grid[i + 1] - t;
        const double ctrl = rule.eval1(t, m, q);
        const double b_left = reward_b1(theta_, sig_, m, ctrl);

        double taper = 1.0;
        if (regularized_) taper = std::max(0.0, 1.0 - std::max(0.0, std::abs(q) - kg_) / eps_);
        double m_next = m + taper * (kap_ * (mubar_ - m) + theta_ * q * ctrl) * h +
                        taper * q * sig_inv_sqrt_ * sn.dW[i];
        double q_next;
        if (!regularized_) {
            q_next = riccati_step1(q, h);
            if (q_next > kg_ * (1.0 + 1e-6))
                throw NumericalError("scalar state: covariance block left its domain");
        } else {
            auto rhs = [&](double x) {
                const double tp = std::max(0.0, 1.0 - std::max(0.0, std::abs(x) - kg_) / eps_);
                return tp == 0.0 ? 0.0 : tp * riccati_rhs1(x);
            };
            const double k1 = rhs(q);
            const double k2 = rhs(q + 0.5 * h * k1);
            const double k3 = rhs(q + 0.5 * h * k2);
            const double k4 = rhs(q + h * k3);
            q_next = q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            m_next += scale_ * sn.star_m[i];
            q_next += scale_ * sn.star_g[i];
        }
        m = m_next;
        q = q_next;

        const double ctrl_r = rule.eval1(sn.grid[i + 1], m, q);
        eta += 0.5 * (b_left + reward_b1(theta_, sig_, m, ctrl_r)) * h;

        const int mk = sn.mark_index[i + 1];
        if (mk >= 0) {
            double tp = 1.0;
            if (regularized_) tp = std::max(0.0, 1.0 - std::max(0.0, std::abs(q) - kg_) / eps_);
            const double denom = std::max(q + gamma_, 1e-10);
            m += tp * (q / std::sqrt(denom)) * sn.marks[static_cast<std::size_t>(mk)];
            q += tp * (-q * q / denom);
        }
    }
    return eta;
}

ScalarEngine::CoupledResult ScalarEngine::run_coupled(double m0, double q0,
                                                      const DecisionRule& rule, double t0,
                                                      int n_steps, std::uint64_t master_seed,
                                                      std::uint64_t path_index) const {
    if (!regularized_) throw ConfigError("run_coupled: needs a regularization config with k");
    const ScalarNoise sn = draw_noise(lam_, T_, t0, n_steps, master_seed, path_index, true);
    const std::size_t n = sn.grid.size() - 1;
    double bm = m0, bq = q0;  // unregularized
    double rm = m0, rq = q0;  // regularized
    CoupledResult out;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = sn.grid[i];
        const double h = sn.grid[i + 1] - t;

        const double bctrl = rule.eval1(t, bm, bq);
        const double rctrl = rule.eval1(t, rm, rq);
        const double b_left_b = reward_b1(theta_, sig_, bm, bctrl);
        const double b_left_r = reward_b1(theta_, sig_, rm, rctrl);

        const double bm_next = bm + (kap_ * (mubar_ - bm) + theta_ * bq * bctrl) * h +
                               bq * sig_inv_sqrt_ * sn.dW[i];
        const double bq_next = riccati_step1(bq, h);

        const double taper = std::max(0.0, 1.0 - std::max(0.0, std::abs(rq) - kg_) / eps_);
        double rm_next = rm + taper * (kap_ * (mubar_ - rm) + theta_ * rq * rctrl) * h +
                         taper * rq * sig_inv_sqrt_ * sn.dW[i] + scale_ * sn.star_m[i];
        auto rhs = [&](double x) {
            const double tp = std::max(0.0, 1.0 - std::max(0.0, std::abs(x) - kg_) / eps_);
            return tp == 0.0 ? 0.0 : tp * riccati_rhs1(x);
        };
        const double k1 = rhs(rq);
        const double k2 = rhs(rq + 0.5 * h * k1);
        const double k3 = rhs(rq + 0.5 * h * k2);
        const double k4 = rhs(rq + h * k3);
        double rq_next = rq + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4) + scale_ * sn.star_g[i];

        bm = bm_next; bq = bq_next; rm = rm_next; rq = rq_next;

        out.eta_base +=
            0.5 * (b_left_b + reward_b1(theta_, sig_, bm, rule.eval1(sn.grid[i + 1], bm, bq))) * h;
        out.eta_reg +=
            0.5 * (b_left_r + reward_b1(theta_, sig_, rm, rule.eval1(sn.grid[i + 1], rm, rq))) * h;

        const int mk = sn.mark_index[i + 1];
        if (mk >= 0) {
            const double u = sn.marks[static_cast<std::size_t>(mk)];
            const double bden = std::max(bq + gamma_, 1e-10);
            bm += (bq / std::sqrt(bden)) * u;
            bq += -bq * bq / bden;
            const double tp = std::max(0.0, 1.0 - std::max(0.0, std::abs(rq) - kg_) / eps_);
            const double rden = std::max(rq + gamma_, 1e-10);
            rm += tp * (rq / std::sqrt(rden)) * u;
            rq += tp * (-rq * rq / rden);
        }
        const double gap = std::max(std::abs(rm - bm), std::abs(rq - bq));
        out.gap_sq_max = std::max(out.gap_sq_max, gap * gap);
    }
    return out;
}

ScalarEngine::WealthResult ScalarEngine::run_wealth(const DecisionRule& rule, int n_steps,
                                                    std::uint64_t master_seed,
                                                    std::uint64_t path_index) const {
    // Mirrors simulate_bundle + run_filter stream for stream.
    RngStream arrivals_rng(master_seed, stream::arrivals, path_index);
    const std::vector<double> arrivals = simulate_arrivals(lam_, T_, arrivals_rng);
    const std::vector<double> grid = make_grid(T_, n_steps, arrivals);
    const std::size_t n = grid.size() - 1;

    std::vector<int> view_at(n + 1, -1);
    {
        const double tol = 1e-12 * T_;
        int k = 0;
        for (double a : arrivals) {
            auto it = std::lower_bound(grid.begin(), grid.end(), a - tol);
            view_at[static_cast<std::size_t>(it - grid.begin())] = k++;
        }
    }

    RngStream drift_rng(master_seed, stream::drift_noise, path_index);
    RngStream return_rng(master_seed, stream::return_noise, path_index);
    RngStream view_rng(master_seed, stream::views, path_index);

    double mu = prior_m_ + std::sqrt(std::max(prior_q_, 0.0)) * drift_rng.normal();
    double m = prior_m_, q = prior_q_;
    double logret = 0.0, logdens = 0.0;

    double cached_h = -1.0, decay = 1.0, noise_std = 0.0;
    const double sqrt_gamma = std::sqrt(gamma_);
    WealthResult out;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = grid[i];
        const double h = grid[i + 1] - t;
        if (h != cached_h) {
            cached_h = h;
            decay = std::exp(-kap_ * h);
            const double var =
                kap_ == 0.0 ? smu_ * h : smu_ * (-std::expm1(-2.0 * kap_ * h)) / (2.0 * kap_);
            noise_std = std::sqrt(std::max(var, 0.0));
        }
        const double ctrl = rule.eval1(t, m, q);

        // exact drift transition and Euler return increment
        const double z = drift_rng.normal();
        const double mu_next = mubar_ + decay * (mu - mubar_) + noise_std * z;
        const double d_ret = mu * h + sigma_r_ * std::sqrt(h) * return_rng.normal();

        logret += ctrl * d_ret - 0.5 * sig_ * ctrl * ctrl * h;
        const double innov = sig_inv_sqrt_ * (d_ret - m * h);
        const double vol_ctrl = sigma_x_ * ctrl;
        logdens += theta_ * vol_ctrl * innov - 0.5 * theta_ * theta_ * vol_ctrl * vol_ctrl * h;

        // filter step
        m = m + kap_ * (mubar_ - m) * h + q * sig_inv_ * (d_ret - m * h);
        q = riccati_step1(q, h);
        mu = mu_next;

        const int k = view_at[i + 1];
        if (k >= 0) {
            const double view = mu + sqrt_gamma * view_rng.normal();
            const double rho = gamma_ / (q + gamma_);
            m = rho * m + (1.0 - rho) * view;
            q = rho * q;
        }
    }
    out.log_return = logret;
    out.log_density = logdens;
    return out;
}

}  // namespace driftlab
