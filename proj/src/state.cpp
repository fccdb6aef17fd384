#include "driftlab/state.hpp"

#include <cmath>

#include "driftlab/errors.hpp"
#include "driftlab/filter.hpp"
#include "driftlab/linalg.hpp"
#include "driftlab/rule.hpp"

namespace driftlab {

int vec_index(int i, int j) {
    if (j < 1 || j > i) throw ConfigError("vec_index: need 1 <= j <= i");
    return i * (i - 1) / 2 + j;
}

Eigen::VectorXd mat_to_vec(const Eigen::MatrixXd& q) {
    if (q.rows() != q.cols()) throw ConfigError("mat_to_vec: matrix must be square");
    if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw ConfigError("mat_to_vec: matrix must be symmetric");
    const auto d = q.rows();
    Eigen::VectorXd g(d * (d + 1) / 2);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) g[k++] = 0.5 * (q(i, j) + q(j, i));
    return g;
}

Eigen::MatrixXd vec_to_mat(const Eigen::VectorXd& g) {
    const auto n = g.size();
    const auto d = static_cast<Eigen::Index>((std::sqrt(8.0 * static_cast<double>(n) + 1.0) - 1.0) / 2.0 + 0.5);
    if (d * (d + 1) / 2 != n) throw ConfigError("vec_to_mat: length is not d(d+1)/2");
    Eigen::MatrixXd q(d, d);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            q(i, j) = g[k];
            q(j, i) = g[k];
            ++k;
        }
    return q;
}

Eigen::VectorXd VecState::full() const {
    Eigen::VectorXd y(dim());
    y << m, g;
    return y;
}

VecState VecState::from_filter(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    return VecState{mean, mat_to_vec(cov)};
}

VecState VecState::from_full(const Eigen::VectorXd& y, int d) {
    const Eigen::Index ng = static_cast<Eigen::Index>(d) * (d + 1) / 2;
    if (y.size() != d + ng) throw ConfigError("VecState::from_full: wrong length");
    return VecState{y.head(d), y.tail(ng)};
}

double dist_to_state_ball(const Eigen::VectorXd& g, double radius) {
    const double norm = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
    return std::max(0.0, norm - radius);
}

void RegularizationConfig::validate(const ModelParams& p) const {
    if (epsilon <= 0.0) throw ConfigError("regularization epsilon must be positive");
    if (min_eigenvalue(p.Gamma) <= epsilon * static_cast<double>(p.d))
        throw ConfigError("epsilon too large: q + Gamma must stay invertible on the band");
    if (k && *k < 1) throw ConfigError("perturbation index k must be a positive integer");
}

RegularizationConfig RegularizationConfig::defaults(const ModelParams& p, std::optional<long> k) {
    RegularizationConfig cfg;
    cfg.epsilon = p.default_epsilon();
    cfg.k = k;
    cfg.validate(p);
    return cfg;
}

Eigen::VectorXd CoeffSet::gamma(const Eigen::VectorXd& u) const {
    Eigen::VectorXd out(jump_gain.rows() + jump_g.size());
    out << jump_gain * u, jump_g;
    return out;
}

namespace {

CoeffSet coeffs_impl(const VecState& y, const Eigen::VectorXd& control, const ModelParams& p,
                     double taper) {
    const int d = p.d;
    if (y.d() != d || control.size() != d) throw ConfigError("coeffs: dimension mismatch");
    const Eigen::MatrixXd q = vec_to_mat(y.g);
    const Eigen::MatrixXd q_plus_gamma = q + p.Gamma;

    CoeffSet cs;
    cs.taper = taper;
    const Eigen::VectorXd alpha_m = p.kappa * (p.mu_bar - y.m) + p.theta * q * control;
    cs.jump_gain = q * sym_inv_sqrt(q_plus_gamma);
    Eigen::MatrixXd gamma_q = -q * sym_inv(q_plus_gamma) * q;
    symmetrize(gamma_q);
    Eigen::MatrixXd alpha_q = p.Sigma_mu() - p.kappa * q - q * p.kappa.transpose() -
                              q * p.Sigma_R_inv() * q + p.lambda * gamma_q;
    symmetrize(alpha_q);

    cs.alpha.resize(y.dim());
    cs.alpha << alpha_m, mat_to_vec(alpha_q);
    cs.beta = Eigen::MatrixXd::Zero(y.dim(), d);
    cs.beta.topRows(d) = q * p.Sigma_R_inv_sqrt();
    cs.jump_g = mat_to_vec(gamma_q);
    if (taper != 1.0) {
        cs.alpha *= taper;
        cs.beta *= taper;
        cs.jump_gain *= taper;
        cs.jump_g *= taper;
    }
    return cs;
}

}  // namespace

CoeffSet coeffs(const VecState& y, const Eigen::VectorXd& control, const ModelParams& p) {
    return coeffs_impl(y, control, p, 1.0);
}

CoeffSet extended_coeffs(const VecState& y, const Eigen::VectorXd& control,
                         const RegularizationConfig& cfg, const ModelParams& p) {
    const double dist = dist_to_state_ball(y.g, p.state_ball_radius());
    const double taper = std::max(0.0, 1.0 - dist / cfg.epsilon);
    if (taper == 0.0) {
        CoeffSet cs;
        cs.taper = 0.0;
        cs.alpha = Eigen::VectorXd::Zero(y.dim());
        cs.beta = Eigen::MatrixXd::Zero(y.dim(), p.d);
        cs.jump_gain = Eigen::MatrixXd::Zero(p.d, p.d);
        cs.jump_g = Eigen::VectorXd::Zero(y.g.size());
        return cs;
    }
    return coeffs_impl(y, control, p, taper);
}

double running_reward_b(const VecState& y, const Eigen::VectorXd& control, const ModelParams& p) {
    const double quad = (p.sigma_X() * control).squaredNorm();
    return p.theta * (control.dot(y.m) - 0.5 * (1.0 - p.theta) * quad);
}

NoiseBundle make_noise_bundle(const ModelParams& p, double t0, int n_base_steps,
                              std::uint64_t master_seed, std::uint64_t path_index,
                              bool with_perturbation) {
    if (t0 < 0.0 || t0 >= p.T) throw ConfigError("make_noise_bundle: t0 must lie in [0, T)");
    NoiseBundle nb;
    RngStream arrivals_rng(master_seed, stream::arrivals, path_index);
    std::vector<double> all_arrivals = simulate_arrivals(p.lambda, p.T, arrivals_rng);
    std::vector<double> arrivals;
    for (double a : all_arrivals)
        if (a > t0) arrivals.push_back(a);
    std::vector<double> grid = make_grid(p.T - t0, n_base_steps, [&] {
        std::vector<double> shifted;
        for (double a : arrivals) shifted.push_back(a - t0);
        return shifted;
    }());
    nb.grid.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) nb.grid[i] = t0 + grid[i];
    nb.grid.front() = t0;
    nb.grid.back() = p.T;
    const auto n = nb.steps();

    RngStream w_rng(master_seed, stream::return_noise, path_index);
    nb.dW.resize(n, p.d);
    for (Eigen::Index i = 0; i < n; ++i)
        nb.dW.row(i) =
            std::sqrt(nb.grid[i + 1] - nb.grid[i]) * w_rng.normal_vector(p.d).transpose();

    RngStream mark_rng(master_seed, stream::views, path_index);
    const double tol = 1e-12 * p.T;
    for (double a : arrivals) {
        auto it = std::lower_bound(nb.grid.begin(), nb.grid.end(), a - tol);
        nb.arrival_steps.push_back(static_cast<Eigen::Index>(it - nb.grid.begin()));
        nb.marks.push_back(mark_rng.normal_vector(p.d));
    }

    if (with_perturbation) {
        const Eigen::Index dim_y = p.d + static_cast<Eigen::Index>(p.d) * (p.d + 1) / 2;
        RngStream star_rng(master_seed, stream::perturbation, path_index);
        nb.dW_star.resize(n, dim_y);
        for (Eigen::Index i = 0; i < n; ++i)
            nb.dW_star.row(i) =
                std::sqrt(nb.grid[i + 1] - nb.grid[i]) * star_rng.normal_vector(dim_y).transpose();
    }
    return nb;
}

StatePath simulate_state(const VecState& y0, const DecisionRule& rule, const NoiseBundle& noise,
                         const std::optional<RegularizationConfig>& cfg, const ModelParams& p) {
    const auto n = noise.steps();
    const bool regularized = cfg.has_value() && cfg->k.has_value();
    if (cfg && !cfg->k) throw ConfigError("simulate_state: regularization config without k");
    if (regularized && noise.dW_star.rows() != n)
        throw ConfigError("simulate_state: perturbation increments missing from the noise bundle");
    const double k_g = p.state_ball_radius();
    const double scale = regularized ? 1.0 / std::sqrt(static_cast<double>(*cfg->k)) : 0.0;

    std::vector<int> mark_at(static_cast<std::size_t>(n) + 1, -1);
    for (std::size_t k = 0; k < noise.arrival_steps.size(); ++k)
        mark_at[static_cast<std::size_t>(noise.arrival_steps[k])] = static_cast<int>(k);

    // Tapered compensated covariance drift, used by the deterministic stages.
    auto g_rhs = [&](const Eigen::VectorXd& g) -> Eigen::VectorXd {
        double taper = 1.0;
        if (regularized) {
            const double dist = dist_to_state_ball(g, k_g);
            taper = std::max(0.0, 1.0 - dist / cfg->epsilon);
            if (taper == 0.0) return Eigen::VectorXd::Zero(g.size());
        }
        const Eigen::MatrixXd q = vec_to_mat(g);
        Eigen::MatrixXd rhs = riccati_rhs(q, p);
        symmetrize(rhs);
        return taper * mat_to_vec(rhs);
    };

    StatePath path;
    path.times.reserve(static_cast<std::size_t>(n) + 1);
    path.states.reserve(static_cast<std::size_t>(n) + 1);
    VecState y = y0;
    path.times.push_back(noise.grid[0]);
    path.states.push_back(y);

    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = noise.grid[i + 1] - noise.grid[i];
        const Eigen::VectorXd control = rule.eval(noise.grid[i], y);

        CoeffSet cs = regularized ? extended_coeffs(y, control, *cfg, p) : coeffs(y, control, p);
        // Continuous drift of the mean block; the covariance block advances
        // with the compensated (Riccati) flow below.
        Eigen::VectorXd m_next = y.m + cs.alpha.head(p.d) * h +
                                 cs.beta.topRows(p.d) * noise.dW.row(i).transpose();

        Eigen::VectorXd g_next;
        if (!regularized) {
            // Same integrator as the filter covariance, so the two paths agree.
            g_next = mat_to_vec(riccati_step(vec_to_mat(y.g), h, p));
        } else {
            const Eigen::VectorXd k1 = g_rhs(y.g);
            const Eigen::VectorXd k2 = g_rhs(y.g + 0.5 * h * k1);
            const Eigen::VectorXd k3 = g_rhs(y.g + 0.5 * h * k2);
            const Eigen::VectorXd k4 = g_rhs(y.g + h * k3);
            g_next = y.g + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (regularized) {
            m_next += scale * noise.dW_star.row(i).head(p.d).transpose();
            g_next += scale * noise.dW_star.row(i).tail(y.g.size()).transpose();
        }
        y.m = std::move(m_next);
        y.g = std::move(g_next);

        const int mk = mark_at[static_cast<std::size_t>(i + 1)];
        if (mk >= 0) {
            path.pre_jump.emplace(i + 1, y);
            const Eigen::VectorXd pre_control = rule.eval(noise.grid[i + 1], y);
            CoeffSet jump_cs =
                regularized ? extended_coeffs(y, pre_control, *cfg, p) : coeffs(y, pre_control, p);
            const Eigen::VectorXd jump = jump_cs.gamma(noise.marks[static_cast<std::size_t>(mk)]);
            y.m += jump.head(p.d);
            y.g += jump.tail(y.g.size());
        }
        if (!regularized) {
            if (dist_to_state_ball(y.g, k_g) > 1e-6 * k_g)
                throw NumericalError("simulate_state: covariance block left its domain");
        }
        path.times.push_back(noise.grid[i + 1]);
        path.states.push_back(y);
    }
    return path;
}

}  // namespace driftlab
