#include "driftlab/market.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>

#include <unsupported/Eigen/MatrixFunctions>

#include "driftlab/csv.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/linalg.hpp"

namespace driftlab {

std::vector<double> simulate_arrivals(double lambda, double T, RngStream& rng) {
    if (lambda < 0.0) throw ConfigError("simulate_arrivals: lambda must be >= 0");
    if (T <= 0.0) throw ConfigError("simulate_arrivals: T must be positive");
    std::vector<double> times;
    if (lambda == 0.0) return times;
    double t = 0.0;
    for (;;) {
        t += rng.exponential(lambda);
        if (t > T) break;
        times.push_back(t);
    }
    return times;
}

std::vector<double> make_grid(double T, int n_base_steps, const std::vector<double>& arrivals) {
    if (n_base_steps < 1) throw ConfigError("make_grid: need at least one step");
    if (T <= 0.0) throw ConfigError("make_grid: T must be positive");
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(n_base_steps) + arrivals.size() + 1);
    for (int i = 0; i <= n_base_steps; ++i)
        grid.push_back(T * static_cast<double>(i) / static_cast<double>(n_base_steps));
    for (double a : arrivals) {
        if (a <= 0.0 || a > T) throw ConfigError("make_grid: arrival time outside (0, T]");
        grid.push_back(a);
    }
    std::sort(grid.begin(), grid.end());
    const double tol = 1e-12 * T;
    std::vector<double> out;
    out.reserve(grid.size());
    for (double t : grid) {
        if (out.empty() || t - out.back() > tol) out.push_back(t);
    }
    out.back() = T;
    return out;
}

namespace {

struct OuTransition {
    Eigen::MatrixXd decay;       // e^{-kappa h}
    Eigen::MatrixXd noise_sqrt;  // square root of the integrated step covariance
};

// Van Loan block exponential for the exact step covariance
// V(h) = int_0^h e^{-kappa s} Sigma_mu e^{-kappa^T s} ds.
OuTransition ou_transition(const ModelParams& p, double h) {
    const int d = p.d;
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * d, 2 * d);
    block.topLeftCorner(d, d) = -p.kappa;
    block.topRightCorner(d, d) = p.Sigma_mu();
    block.bottomRightCorner(d, d) = p.kappa.transpose();
    Eigen::MatrixXd e = (block * h).exp();
    OuTransition tr;
    tr.decay = e.topLeftCorner(d, d);
    Eigen::MatrixXd v = e.topRightCorner(d, d) * tr.decay.transpose();
    symmetrize(v);
    tr.noise_sqrt = sym_sqrt(psd_clip(v, 1e-10));
    return tr;
}

}  // namespace

Eigen::MatrixXd simulate_drift_from_noise(const ModelParams& p, const std::vector<double>& grid,
                                          const Eigen::VectorXd& mu0, const Eigen::MatrixXd& z) {
    if (!eigenvalues_have_positive_real_part(p.kappa, -1e-12))
        throw ConfigError("simulate_drift: kappa must not be explosive");
    const auto n = static_cast<Eigen::Index>(grid.size()) - 1;
    if (z.rows() != n || z.cols() != p.d2)
        throw ConfigError("simulate_drift: noise block has wrong shape");
    Eigen::MatrixXd path(n + 1, p.d);
    path.row(0) = mu0.transpose();
    std::map<std::int64_t, OuTransition> cache;
    Eigen::VectorXd mu = mu0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = grid[i + 1] - grid[i];
        std::int64_t key;
        static_assert(sizeof(key) == sizeof(h));
        std::memcpy(&key, &h, sizeof(key));
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, ou_transition(p, h)).first;
        const OuTransition& tr = it->second;
        mu = p.mu_bar + tr.decay * (mu - p.mu_bar) +
             tr.noise_sqrt * z.row(i).head(p.d).transpose();
        path.row(i + 1) = mu.transpose();
    }
    return path;
}

Eigen::MatrixXd simulate_drift(const ModelParams& p, const std::vector<double>& grid,
                               RngStream& rng) {
    const auto n = static_cast<Eigen::Index>(grid.size()) - 1;
    Eigen::VectorXd mu0 = p.m0 + sym_sqrt(p.q0) * rng.normal_vector(p.d);
    Eigen::MatrixXd z(n, p.d2);
    for (Eigen::Index i = 0; i < n; ++i) z.row(i) = rng.normal_vector(p.d2).transpose();
    return simulate_drift_from_noise(p, grid, mu0, z);
}

Eigen::MatrixXd simulate_returns(const ModelParams& p, const Eigen::MatrixXd& drift_path,
                                 const Eigen::MatrixXd& dW_R, const std::vector<double>& grid) {
    const auto n = static_cast<Eigen::Index>(grid.size()) - 1;
    if (drift_path.rows() != n + 1 || dW_R.rows() != n)
        throw ConfigError("simulate_returns: drift path and increments must share the grid");
    if (drift_path.cols() != p.d || dW_R.cols() != p.d1)
        throw ConfigError("simulate_returns: wrong column counts");
    Eigen::MatrixXd r(n + 1, p.d);
    r.row(0).setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = grid[i + 1] - grid[i];
        r.row(i + 1) = r.row(i) + drift_path.row(i) * h + (p.sigma_R * dW_R.row(i).transpose()).transpose();
    }
    return r;
}

Eigen::VectorXd generate_view(const Eigen::VectorXd& mu_at_tk, const Eigen::MatrixXd& Gamma,
                              RngStream& rng) {
    if ((Gamma - Gamma.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw ConfigError("generate_view: Gamma must be symmetric");
    if (min_eigenvalue(Gamma) <= 0.0)
        throw ConfigError("generate_view: Gamma must be positive definite");
    return mu_at_tk + sym_sqrt(Gamma) * rng.normal_vector(mu_at_tk.size());
}

PathBundle simulate_bundle(const ModelParams& p, std::uint64_t master_seed,
                           std::uint64_t bundle_index, int n_base_steps) {
    PathBundle b;
    RngStream arrivals_rng(master_seed, stream::arrivals, bundle_index);
    std::vector<double> arrivals = simulate_arrivals(p.lambda, p.T, arrivals_rng);
    b.grid = make_grid(p.T, n_base_steps, arrivals);
    const auto n = static_cast<Eigen::Index>(b.grid.size()) - 1;

    RngStream drift_rng(master_seed, stream::drift_noise, bundle_index);
    Eigen::VectorXd mu0 = p.m0 + sym_sqrt(p.q0) * drift_rng.normal_vector(p.d);
    Eigen::MatrixXd z(n, p.d2);
    for (Eigen::Index i = 0; i < n; ++i) z.row(i) = drift_rng.normal_vector(p.d2).transpose();
    b.drift_path = simulate_drift_from_noise(p, b.grid, mu0, z);
    b.dW_mu.resize(n, p.d2);
    for (Eigen::Index i = 0; i < n; ++i)
        b.dW_mu.row(i) = std::sqrt(b.grid[i + 1] - b.grid[i]) * z.row(i);

    RngStream return_rng(master_seed, stream::return_noise, bundle_index);
    b.dW_R.resize(n, p.d1);
    for (Eigen::Index i = 0; i < n; ++i)
        b.dW_R.row(i) =
            std::sqrt(b.grid[i + 1] - b.grid[i]) * return_rng.normal_vector(p.d1).transpose();
    b.return_path = simulate_returns(p, b.drift_path, b.dW_R, b.grid);

    RngStream view_rng(master_seed, stream::views, bundle_index);
    const double tol = 1e-12 * p.T;
    for (double a : arrivals) {
        auto it = std::lower_bound(b.grid.begin(), b.grid.end(), a - tol);
        const auto idx = static_cast<Eigen::Index>(it - b.grid.begin());
        ExpertView v;
        v.arrival_time = b.grid[static_cast<std::size_t>(idx)];
        v.value = generate_view(b.drift_path.row(idx).transpose(), p.Gamma, view_rng);
        b.views.push_back(std::move(v));
        b.arrival_steps.push_back(idx);
    }
    return b;
}

void write_bundle_csv(const PathBundle& b, const std::string& paths_file,
                      const std::string& views_file) {
    const auto d = b.drift_path.cols();
    std::vector<std::string> header{"t"};
    for (Eigen::Index j = 0; j < d; ++j) header.push_back("mu_" + std::to_string(j + 1));
    for (Eigen::Index j = 0; j < d; ++j) header.push_back("R_" + std::to_string(j + 1));
    CsvWriter paths(paths_file, header);
    for (std::size_t i = 0; i < b.grid.size(); ++i) {
        std::vector<double> row{b.grid[i]};
        for (Eigen::Index j = 0; j < d; ++j) row.push_back(b.drift_path(static_cast<Eigen::Index>(i), j));
        for (Eigen::Index j = 0; j < d; ++j) row.push_back(b.return_path(static_cast<Eigen::Index>(i), j));
        paths.row(row);
    }
    std::vector<std::string> vheader{"T_k"};
    for (Eigen::Index j = 0; j < d; ++j) vheader.push_back("Z_" + std::to_string(j + 1));
    CsvWriter views(views_file, vheader);
    for (const auto& v : b.views) {
        std::vector<double> row{v.arrival_time};
        for (Eigen::Index j = 0; j < d; ++j) row.push_back(v.value[j]);
        views.row(row);
    }
}

}  // namespace driftlab
