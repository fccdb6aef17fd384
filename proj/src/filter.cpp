#include "driftlab/filter.hpp"

#include <cmath>

#include "driftlab/csv.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/linalg.hpp"

namespace driftlab {

Eigen::MatrixXd riccati_rhs(const Eigen::MatrixXd& q, const ModelParams& p) {
    return p.Sigma_mu() - p.kappa * q - q * p.kappa.transpose() - q * p.Sigma_R_inv() * q;
}

namespace {

Eigen::MatrixXd rk4_once(const Eigen::MatrixXd& q, double h, const ModelParams& p) {
    Eigen::MatrixXd k1 = riccati_rhs(q, p);
    Eigen::MatrixXd k2 = riccati_rhs(q + 0.5 * h * k1, p);
    Eigen::MatrixXd k3 = riccati_rhs(q + 0.5 * h * k2, p);
    Eigen::MatrixXd k4 = riccati_rhs(q + h * k3, p);
    Eigen::MatrixXd out = q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    symmetrize(out);
    return psd_clip(out, 1e-8);
}

}  // namespace

Eigen::MatrixXd riccati_step(const Eigen::MatrixXd& q, double h, const ModelParams& p) {
    if (h == 0.0) return q;
    const double rhs_norm = row_sum_norm(riccati_rhs(q, p));
    if (rhs_norm * h > 0.1 * row_sum_norm(q)) {
        Eigen::MatrixXd out = q;
        for (int i = 0; i < 4; ++i) out = rk4_once(out, h / 4.0, p);
        return out;
    }
    return rk4_once(q, h, p);
}

Eigen::MatrixXd integrate_riccati(const Eigen::MatrixXd& q0, double t0, double t1, double step,
                                  const ModelParams& p) {
    if (t1 < t0) throw ConfigError("integrate_riccati: t1 must be >= t0");
    if (step <= 0.0) throw ConfigError("integrate_riccati: step must be positive");
    Eigen::MatrixXd q = (q0 + q0.transpose()) * 0.5;
    double t = t0;
    while (t < t1 - 1e-15 * std::max(1.0, t1)) {
        const double h = std::min(step, t1 - t);
        q = riccati_step(q, h, p);
        t += h;
    }
    return q;
}

FilterState propagate_mean(const FilterState& s, const Eigen::VectorXd& d_return, double dt,
                           const ModelParams& p) {
    if (dt <= 0.0) throw ConfigError("propagate_mean: dt must be positive");
    FilterState out;
    out.t = s.t + dt;
    out.mean = s.mean + p.kappa * (p.mu_bar - s.mean) * dt +
               s.cov * (p.Sigma_R_inv() * (d_return - s.mean * dt));
    out.cov = riccati_step(s.cov, dt, p);
    return out;
}

FilterState bayes_update(const FilterState& s, const ExpertView& view, const ModelParams& p) {
    const Eigen::MatrixXd rho =
        p.Gamma * (s.cov + p.Gamma).llt().solve(Eigen::MatrixXd::Identity(p.d, p.d));
    FilterState out;
    out.t = s.t;
    out.mean = rho * s.mean + (Eigen::MatrixXd::Identity(p.d, p.d) - rho) * view.value;
    out.cov = rho * s.cov;
    symmetrize(out.cov);
    out.cov = psd_clip(out.cov, 1e-8);
    return out;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> view_predictive(const FilterState& s,
                                                            const ModelParams& p) {
    return {s.mean, p.Gamma + s.cov};
}

FilterPath run_filter(const PathBundle& bundle, const Eigen::VectorXd& m0,
                      const Eigen::MatrixXd& q0, const ModelParams& p) {
    const auto n = bundle.steps();
    FilterPath path;
    path.times.reserve(static_cast<std::size_t>(n) + 1 + bundle.views.size());

    // Arrival lookup by grid index.
    std::vector<int> view_at(static_cast<std::size_t>(n) + 1, -1);
    for (std::size_t k = 0; k < bundle.views.size(); ++k) {
        const auto idx = bundle.arrival_steps[k];
        if (idx < 0 || idx > n) throw ConfigError("run_filter: view not on the grid");
        view_at[static_cast<std::size_t>(idx)] = static_cast<int>(k);
    }

    const double bound = p.cov_bound();
    FilterState s{bundle.grid[0], m0, psd_clip(q0, 1e-8)};
    auto emit = [&](const FilterState& st, int flag) {
        path.times.push_back(st.t);
        path.means.push_back(st.mean);
        path.covs.push_back(st.cov);
        path.flags.push_back(flag);
        const double norm = row_sum_norm(st.cov);
        path.max_cov_norm = std::max(path.max_cov_norm, norm);
        if (norm > bound) ++path.bound_violations;
    };

    if (view_at[0] >= 0) throw ConfigError("run_filter: no view can arrive at t = 0");
    emit(s, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double dt = bundle.grid[i + 1] - bundle.grid[i];
        const Eigen::VectorXd d_return =
            (bundle.return_path.row(i + 1) - bundle.return_path.row(i)).transpose();
        s = propagate_mean(s, d_return, dt, p);
        const int k = view_at[static_cast<std::size_t>(i + 1)];
        if (k >= 0) {
            emit(s, 1);
            s = bayes_update(s, bundle.views[static_cast<std::size_t>(k)], p);
            emit(s, 2);
        } else {
            emit(s, 0);
        }
    }
    return path;
}

void write_filter_csv(const FilterPath& path, const std::string& file) {
    if (path.size() == 0) throw ConfigError("write_filter_csv: empty path");
    const auto d = path.means.front().size();
    std::vector<std::string> header{"t"};
    for (Eigen::Index j = 0; j < d; ++j) header.push_back("M_" + std::to_string(j + 1));
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            header.push_back("Q_" + std::to_string(i + 1) + std::to_string(j + 1));
    header.emplace_back("update_flag");
    CsvWriter out(file, header);
    for (Eigen::Index r = 0; r < path.size(); ++r) {
        std::vector<double> row{path.times[static_cast<std::size_t>(r)]};
        const auto& m = path.means[static_cast<std::size_t>(r)];
        const auto& q = path.covs[static_cast<std::size_t>(r)];
        for (Eigen::Index j = 0; j < d; ++j) row.push_back(m[j]);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j <= i; ++j) row.push_back(q(i, j));
        row.push_back(static_cast<double>(path.flags[static_cast<std::size_t>(r)]));
        out.row(row);
    }
}

}  // namespace driftlab
