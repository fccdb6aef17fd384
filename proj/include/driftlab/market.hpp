#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "driftlab/params.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

/// One expert signal: a noisy unbiased observation of the hidden drift
/// delivered at a random arrival time.
struct ExpertView {
    double arrival_time = 0.0;
    Eigen::VectorXd value;
};

/// A simulated scenario under the physical measure: time grid (arrivals
/// spliced into the uniform base grid), driving Brownian increments, hidden
/// drift path, return path and the expert views.
struct PathBundle {
    std::vector<double> grid;        ///< n+1 strictly increasing points, grid[0]=0, grid[n]=T
    Eigen::MatrixXd dW_R;            ///< n x d1 increments of the return Brownian motion
    Eigen::MatrixXd dW_mu;           ///< n x d2 increments of the drift Brownian motion
    Eigen::MatrixXd drift_path;      ///< (n+1) x d hidden drift at grid points
    Eigen::MatrixXd return_path;     ///< (n+1) x d cumulative returns, return_path.row(0)=0
    std::vector<ExpertView> views;   ///< strictly increasing arrival times
    std::vector<Eigen::Index> arrival_steps;  ///< grid index of each arrival

    Eigen::Index steps() const { return static_cast<Eigen::Index>(grid.size()) - 1; }
};

/// Poisson arrival times on (0, T]: cumulative exponential(lambda) gaps.
/// Empty for lambda = 0.
std::vector<double> simulate_arrivals(double lambda, double T, RngStream& rng);

/// Uniform base grid of n_base_steps on [0, T] with the arrival times spliced
/// in (duplicates within 1e-12 * T merged).
std::vector<double> make_grid(double T, int n_base_steps, const std::vector<double>& arrivals);

/// Exact Ornstein-Uhlenbeck transition of the hidden drift along the grid.
/// Consumes one mu0 draw (d normals) and one d2-block of normals per step.
Eigen::MatrixXd simulate_drift(const ModelParams& p, const std::vector<double>& grid,
                               RngStream& rng);

/// Deterministic core of simulate_drift: mu0 given, step noise given as
/// standard normal rows (n x d2). The first d entries of each row drive the
/// exact transition, scaled to the integrated step covariance.
Eigen::MatrixXd simulate_drift_from_noise(const ModelParams& p, const std::vector<double>& grid,
                                          const Eigen::VectorXd& mu0, const Eigen::MatrixXd& z);

/// Euler return increments dR = mu dt + sigma_R dW, accumulated from R_0 = 0.
Eigen::MatrixXd simulate_returns(const ModelParams& p, const Eigen::MatrixXd& drift_path,
                                 const Eigen::MatrixXd& dW_R, const std::vector<double>& grid);

/// Expert signal Z = mu + Gamma^{1/2} eps with eps standard normal.
Eigen::VectorXd generate_view(const Eigen::VectorXd& mu_at_tk, const Eigen::MatrixXd& Gamma,
                              RngStream& rng);

/// Complete reproducible bundle. All randomness is derived from
/// (master_seed, bundle_index) through the named streams, so bundles can be
/// generated independently and in parallel.
PathBundle simulate_bundle(const ModelParams& p, std::uint64_t master_seed,
                           std::uint64_t bundle_index, int n_base_steps);

/// CSV dump: paths file with columns t, mu_1..mu_d, R_1..R_d and a sidecar
/// views file with columns T_k, Z_1..Z_d.
void write_bundle_csv(const PathBundle& b, const std::string& paths_file,
                      const std::string& views_file);

}  // namespace driftlab
