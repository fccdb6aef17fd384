#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "driftlab/params.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

class DecisionRule;

/// Position of the symmetric-matrix entry (i, j), i >= j, in the
/// lower-triangle row-order vectorization. One-based on both sides:
/// (1,1) -> 1, (2,1) -> 2, (2,2) -> 3, ...
int vec_index(int i, int j);

/// Lower-triangle row-order vectorization of a symmetric matrix.
/// Asymmetry beyond 1e-10 is rejected.
Eigen::VectorXd mat_to_vec(const Eigen::MatrixXd& q);

/// Inverse of mat_to_vec; fills both triangles.
Eigen::MatrixXd vec_to_mat(const Eigen::VectorXd& g);

/// Control-problem state y = (m, g): filter mean plus the vectorized
/// covariance, dimension d(d+3)/2.
struct VecState {
    Eigen::VectorXd m;
    Eigen::VectorXd g;

    int d() const { return static_cast<int>(m.size()); }
    Eigen::Index dim() const { return m.size() + g.size(); }
    Eigen::MatrixXd cov() const { return vec_to_mat(g); }
    Eigen::VectorXd full() const;

    static VecState from_filter(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);
    static VecState from_full(const Eigen::VectorXd& y, int d);
};

/// Distance (max norm) from g to the ball {||g|| <= radius} that realizes
/// the bounded covariance domain: max(0, ||g|| - radius).
double dist_to_state_ball(const Eigen::VectorXd& g, double radius);

/// Settings of the coefficient extension and state perturbation.
struct RegularizationConfig {
    double epsilon = 0.0;          ///< width of the coefficient transition band
    std::optional<long> k;         ///< perturbation index; noise scale 1/sqrt(k)

    void validate(const ModelParams& p) const;
    static RegularizationConfig defaults(const ModelParams& p,
                                         std::optional<long> k = std::nullopt);
};

/// Coefficient functions of the controlled state SDE evaluated at one point.
/// `alpha` carries the full drift including the lambda-compensated jump part
/// of the covariance block; the plain Riccati drift is alpha minus
/// lambda * (0; jump_g).
struct CoeffSet {
    Eigen::VectorXd alpha;      ///< d_Y drift (alpha_M; alpha_G)
    Eigen::MatrixXd beta;       ///< d_Y x d diffusion; covariance rows are zero
    Eigen::MatrixXd jump_gain;  ///< d x d matrix q (q + Gamma)^{-1/2}
    Eigen::VectorXd jump_g;     ///< vectorized covariance jump -q (q + Gamma)^{-1} q
    double taper = 1.0;         ///< extension factor applied (1 inside the domain)

    /// Jump map u -> (jump_gain u; jump_g).
    Eigen::VectorXd gamma(const Eigen::VectorXd& u) const;
};

/// Coefficients on the natural domain (q PSD, q + Gamma PD).
CoeffSet coeffs(const VecState& y, const Eigen::VectorXd& control, const ModelParams& p);

/// Extension to the whole space: coefficients are multiplied by
/// max(0, 1 - dist(g, ball)/epsilon), so they coincide with coeffs() on the
/// domain and vanish outside the epsilon-neighborhood. (q + Gamma) is
/// eigenvalue-floored so the map stays total for indefinite q in the band.
CoeffSet extended_coeffs(const VecState& y, const Eigen::VectorXd& control,
                         const RegularizationConfig& cfg, const ModelParams& p);

/// Running reward integrand theta (p^T m - (1-theta)/2 ||sigma_X p||^2).
double running_reward_b(const VecState& y, const Eigen::VectorXd& control, const ModelParams& p);

/// Driving noise of one state path under the changed measure: shared grid,
/// Brownian increments, arrival marks, and optionally the independent
/// perturbation increments.
struct NoiseBundle {
    std::vector<double> grid;
    Eigen::MatrixXd dW;                        ///< n x d
    std::vector<Eigen::Index> arrival_steps;   ///< grid indices of arrivals
    std::vector<Eigen::VectorXd> marks;        ///< one standard normal d-vector per arrival
    Eigen::MatrixXd dW_star;                   ///< n x d_Y, empty unless requested

    Eigen::Index steps() const { return static_cast<Eigen::Index>(grid.size()) - 1; }
};

/// Build the noise for one path from the named streams. Streams are shared
/// with the physical-measure simulation where dimensions allow, which gives
/// common random numbers across paired runs using the same
/// (master_seed, path_index).
NoiseBundle make_noise_bundle(const ModelParams& p, double t0, int n_base_steps,
                              std::uint64_t master_seed, std::uint64_t path_index,
                              bool with_perturbation);

/// Simulated state path. States at arrival grid points are post-jump; the
/// pre-jump values are kept separately for reward integration.
struct StatePath {
    std::vector<double> times;
    std::vector<VecState> states;
    std::map<Eigen::Index, VecState> pre_jump;
};

/// Euler-Maruyama simulation of the controlled state between grid points
/// (covariance block integrated with the fourth-order deterministic step),
/// jump applied at each arrival with the bundled Gaussian mark. With a
/// regularization config the extended coefficients are used and the
/// 1/sqrt(k)-scaled perturbation increments are added.
StatePath simulate_state(const VecState& y0, const DecisionRule& rule, const NoiseBundle& noise,
                         const std::optional<RegularizationConfig>& cfg, const ModelParams& p);

}  // namespace driftlab
