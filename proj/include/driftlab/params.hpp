#pragma once

#include <Eigen/Dense>

namespace driftlab {

/// Market, filter and preference constants.
///
/// Fields are public and set directly; call validate() once after filling
/// them (and before any parallel use) so derived matrices are cached.
/// Strict validation is what the configuration loader applies. Lenient
/// validation admits the degenerate corners used in analysis runs
/// (sigma_mu = 0, kappa with zero eigenvalues) where only positive
/// semi-definiteness is meaningful.
struct ModelParams {
    int d = 1;   ///< number of risky assets
    int d1 = 1;  ///< dimension of the return Brownian motion (>= d)
    int d2 = 1;  ///< dimension of the drift Brownian motion (>= d)

    Eigen::MatrixXd kappa;     ///< mean-reversion speed, d x d
    Eigen::VectorXd mu_bar;    ///< mean-reversion level, d
    Eigen::MatrixXd sigma_mu;  ///< drift volatility, d x d2
    Eigen::MatrixXd sigma_R;   ///< return volatility, d x d1
    Eigen::MatrixXd Gamma;     ///< expert noise covariance, d x d
    double lambda = 0.0;       ///< expert arrival intensity per unit time
    double theta = 0.5;        ///< risk parameter, nonzero and < 1
    double T = 1.0;            ///< horizon
    Eigen::VectorXd m0;        ///< prior mean of the hidden drift
    Eigen::MatrixXd q0;        ///< prior covariance of the hidden drift
    double x0 = 1.0;           ///< initial wealth

    /// Checks invariants and fills the derived-quantity cache. Throws
    /// ConfigError on violation.
    void validate(bool strict = true);

    bool prepared() const { return prepared_; }

    // Cached derived quantities, available after validate().
    const Eigen::MatrixXd& Sigma_R() const;        ///< sigma_R sigma_R^T
    const Eigen::MatrixXd& Sigma_mu() const;       ///< sigma_mu sigma_mu^T
    const Eigen::MatrixXd& Sigma_R_inv() const;
    const Eigen::MatrixXd& sigma_X() const;        ///< Sigma_R^{1/2}
    const Eigen::MatrixXd& Sigma_R_inv_sqrt() const;
    const Eigen::MatrixXd& stationary_cov() const; ///< algebraic Riccati solution
    double cov_bound() const;                      ///< bound on ||Q_t|| (row-sum norm)
    double state_ball_radius() const;              ///< K_G, equals cov_bound()
    double default_epsilon() const;                ///< default extension width

    /// Convenience scalar-model factory (d = d1 = d2 = 1).
    static ModelParams scalar(double kappa, double mu_bar, double sigma_mu, double sigma_R,
                              double Gamma, double lambda, double theta, double T, double m0,
                              double q0, double x0 = 1.0, bool strict = false);

private:
    void require() const;

    bool prepared_ = false;
    Eigen::MatrixXd sigma_r_sq_, sigma_mu_sq_, sigma_r_inv_, sigma_x_, sigma_r_inv_sqrt_;
    Eigen::MatrixXd stationary_cov_;
    double cov_bound_ = 0.0;
};

/// Stationary solution of Sigma_mu - kappa q - q kappa^T - q Sigma_R^{-1} q = 0
/// (Riccati integration to near-stationarity, then Newton polish).
Eigen::MatrixXd solve_algebraic_riccati(const Eigen::MatrixXd& kappa,
                                        const Eigen::MatrixXd& sigma_mu_sq,
                                        const Eigen::MatrixXd& sigma_r_inv);

}  // namespace driftlab
