#pragma once

#include <vector>

#include <Eigen/Dense>

#include "driftlab/market.hpp"
#include "driftlab/params.hpp"

namespace driftlab {

/// Conditional Gaussian filter state: mean and covariance of the hidden
/// drift given returns observed so far and the expert views received.
struct FilterState {
    double t = 0.0;
    Eigen::VectorXd mean;  ///< conditional mean, d
    Eigen::MatrixXd cov;   ///< conditional covariance, d x d, symmetric PSD
};

/// Right-hand side of the covariance flow between view arrivals:
/// Sigma_mu - kappa Q - Q kappa^T - Q Sigma_R^{-1} Q.
Eigen::MatrixXd riccati_rhs(const Eigen::MatrixXd& q, const ModelParams& p);

/// One classical fourth-order step of the covariance flow over h, with
/// symmetrization and PSD clipping. Sub-steps (4) engage when the step is
/// stiff relative to the current magnitude (||rhs|| h > 0.1 ||Q||).
Eigen::MatrixXd riccati_step(const Eigen::MatrixXd& q, double h, const ModelParams& p);

/// Integrate the covariance flow from t0 to t1 with the given base step.
Eigen::MatrixXd integrate_riccati(const Eigen::MatrixXd& q0, double t0, double t1, double step,
                                  const ModelParams& p);

/// One Euler step of the conditional mean driven by the return increment,
/// dM = kappa(mu_bar - M) dt + Q Sigma_R^{-1} (dR - M dt), followed by a
/// covariance step over dt.
FilterState propagate_mean(const FilterState& s, const Eigen::VectorXd& d_return, double dt,
                           const ModelParams& p);

/// Conjugate Bayesian update at a view arrival with shrinkage factor
/// rho = Gamma (Q + Gamma)^{-1}: mean <- rho M + (I - rho) Z, cov <- rho Q.
FilterState bayes_update(const FilterState& s, const ExpertView& view, const ModelParams& p);

/// Predictive law of the incoming view given the pre-arrival state:
/// mean M, covariance Gamma + Q.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> view_predictive(const FilterState& s,
                                                            const ModelParams& p);

/// Filter output along a bundle grid. Arrival points carry both the
/// pre-update and post-update state.
struct FilterPath {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covs;
    /// 0 = regular point, 1 = pre-update row at an arrival, 2 = post-update row.
    std::vector<int> flags;
    double max_cov_norm = 0.0;   ///< max over the path of ||Q_t|| (row-sum norm)
    int bound_violations = 0;    ///< points where ||Q_t|| exceeded the covariance bound

    Eigen::Index size() const { return static_cast<Eigen::Index>(times.size()); }
};

/// Run the filter along a bundle: propagate between grid points, update at
/// arrivals. Every grid point emits one row; arrivals emit pre and post rows.
FilterPath run_filter(const PathBundle& bundle, const Eigen::VectorXd& m0,
                      const Eigen::MatrixXd& q0, const ModelParams& p);

/// CSV export: t, M_1..M_d, lower-triangle of Q in row order, update flag.
void write_filter_csv(const FilterPath& path, const std::string& file);

}  // namespace driftlab
