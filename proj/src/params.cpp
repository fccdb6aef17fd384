#include "driftlab/params.hpp"

#include <cmath>
#include <string>

#include "driftlab/errors.hpp"
#include "driftlab/linalg.hpp"

namespace driftlab {

namespace {

void check_dims(const ModelParams& p) {
    const auto d = p.d;
    if (d < 1) throw ConfigError("d must be >= 1");
    if (p.d1 < d || p.d2 < d) throw ConfigError("Brownian dimensions d1, d2 must be >= d");
    auto want = [&](const Eigen::MatrixXd& m, int r, int c, const char* name) {
        if (m.rows() != r || m.cols() != c)
            throw ConfigError(std::string(name) + " has wrong shape");
    };
    want(p.kappa, d, d, "kappa");
    want(p.sigma_mu, d, p.d2, "sigma_mu");
    want(p.sigma_R, d, p.d1, "sigma_R");
    want(p.Gamma, d, d, "Gamma");
    want(p.q0, d, d, "q0");
    if (p.mu_bar.size() != d) throw ConfigError("mu_bar has wrong length");
    if (p.m0.size() != d) throw ConfigError("m0 has wrong length");
}

}  // namespace

void ModelParams::validate(bool strict) {
    check_dims(*this);
    if (theta == 0.0 || theta >= 1.0) throw ConfigError("theta must lie in (-inf,0) or (0,1)");
    if (T <= 0.0) throw ConfigError("horizon T must be positive");
    if (x0 <= 0.0) throw ConfigError("initial wealth x0 must be positive");
    if (lambda < 0.0) throw ConfigError("arrival intensity lambda must be >= 0");

    sigma_r_sq_ = sigma_R * sigma_R.transpose();
    sigma_mu_sq_ = sigma_mu * sigma_mu.transpose();

    Eigen::LLT<Eigen::MatrixXd> llt_r(sigma_r_sq_);
    if (llt_r.info() != Eigen::Success)
        throw ConfigError("Sigma_R = sigma_R sigma_R^T must be positive definite");
    Eigen::LLT<Eigen::MatrixXd> llt_g(Gamma);
    if (llt_g.info() != Eigen::Success) throw ConfigError("Gamma must be positive definite");
    if ((Gamma - Gamma.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw ConfigError("Gamma must be symmetric");
    if ((q0 - q0.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw ConfigError("q0 must be symmetric");
    if (min_eigenvalue(q0) < -1e-10) throw ConfigError("q0 must be positive semi-definite");

    if (strict) {
        Eigen::LLT<Eigen::MatrixXd> llt_m(sigma_mu_sq_);
        if (llt_m.info() != Eigen::Success)
            throw ConfigError("Sigma_mu = sigma_mu sigma_mu^T must be positive definite");
        if (!eigenvalues_have_positive_real_part(kappa))
            throw ConfigError("all eigenvalues of kappa must have positive real part");
    } else {
        if (min_eigenvalue(sigma_mu_sq_) < -1e-10)
            throw ConfigError("Sigma_mu must be positive semi-definite");
        if (!eigenvalues_have_positive_real_part(kappa, -1e-12))
            throw ConfigError("kappa must not have eigenvalues with negative real part");
    }

    sigma_r_inv_ = llt_r.solve(Eigen::MatrixXd::Identity(d, d));
    symmetrize(sigma_r_inv_);
    sigma_x_ = sym_sqrt(sigma_r_sq_);
    sigma_r_inv_sqrt_ = sym_inv_sqrt(sigma_r_sq_, 1e-300);
    stationary_cov_ = solve_algebraic_riccati(kappa, sigma_mu_sq_, sigma_r_inv_);
    // Margin 1.5 covers the transient overshoot between q0 and the
    // stationary point along the Riccati flow.
    cov_bound_ = 1.5 * std::max(row_sum_norm(q0), row_sum_norm(stationary_cov_));
    if (cov_bound_ <= 0.0) cov_bound_ = 1e-12;  // both q0 and q* zero
    prepared_ = true;
}

void ModelParams::require() const {
    if (!prepared_) throw ConfigError("ModelParams used before validate()");
}

const Eigen::MatrixXd& ModelParams::Sigma_R() const { require(); return sigma_r_sq_; }
const Eigen::MatrixXd& ModelParams::Sigma_mu() const { require(); return sigma_mu_sq_; }
const Eigen::MatrixXd& ModelParams::Sigma_R_inv() const { require(); return sigma_r_inv_; }
const Eigen::MatrixXd& ModelParams::sigma_X() const { require(); return sigma_x_; }
const Eigen::MatrixXd& ModelParams::Sigma_R_inv_sqrt() const { require(); return sigma_r_inv_sqrt_; }
const Eigen::MatrixXd& ModelParams::stationary_cov() const { require(); return stationary_cov_; }
double ModelParams::cov_bound() const { require(); return cov_bound_; }
double ModelParams::state_ball_radius() const { require(); return cov_bound_; }

double ModelParams::default_epsilon() const {
    require();
    return 0.1 * std::min(1.0, min_eigenvalue(Gamma)) / static_cast<double>(d);
}

ModelParams ModelParams::scalar(double kappa_, double mu_bar_, double sigma_mu_, double sigma_R_,
                                double Gamma_, double lambda_, double theta_, double T_,
                                double m0_, double q0_, double x0_, bool strict) {
    ModelParams p;
    p.d = p.d1 = p.d2 = 1;
    p.kappa = Eigen::MatrixXd::Constant(1, 1, kappa_);
    p.mu_bar = Eigen::VectorXd::Constant(1, mu_bar_);
    p.sigma_mu = Eigen::MatrixXd::Constant(1, 1, sigma_mu_);
    p.sigma_R = Eigen::MatrixXd::Constant(1, 1, sigma_R_);
    p.Gamma = Eigen::MatrixXd::Constant(1, 1, Gamma_);
    p.lambda = lambda_;
    p.theta = theta_;
    p.T = T_;
    p.m0 = Eigen::VectorXd::Constant(1, m0_);
    p.q0 = Eigen::MatrixXd::Constant(1, 1, q0_);
    p.x0 = x0_;
    p.validate(strict);
    return p;
}

Eigen::MatrixXd solve_algebraic_riccati(const Eigen::MatrixXd& kappa,
                                        const Eigen::MatrixXd& sigma_mu_sq,
                                        const Eigen::MatrixXd& sigma_r_inv) {
    const Eigen::Index d = kappa.rows();
    auto rhs = [&](const Eigen::MatrixXd& q) -> Eigen::MatrixXd {
        return sigma_mu_sq - kappa * q - q * kappa.transpose() - q * sigma_r_inv * q;
    };
    const double scale = std::max(1.0, sigma_mu_sq.cwiseAbs().maxCoeff());
    Eigen::MatrixXd q = sigma_mu_sq;  // PSD start inside the attraction basin
    if (rhs(q).cwiseAbs().maxCoeff() <= 1e-14 * scale) return q;

    // Integrate the flow toward the fixed point, then Newton polish.
    const double h = 0.05 / std::max(1.0, kappa.cwiseAbs().maxCoeff() +
                                              sigma_r_inv.cwiseAbs().maxCoeff() *
                                                  sigma_mu_sq.cwiseAbs().maxCoeff());
    for (int i = 0; i < 5000; ++i) {
        Eigen::MatrixXd k1 = rhs(q);
        Eigen::MatrixXd k2 = rhs(q + 0.5 * h * k1);
        Eigen::MatrixXd k3 = rhs(q + 0.5 * h * k2);
        Eigen::MatrixXd k4 = rhs(q + h * k3);
        q += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        symmetrize(q);
        if (rhs(q).cwiseAbs().maxCoeff() < 1e-6 * scale) break;
    }
    for (int i = 0; i < 100; ++i) {
        Eigen::MatrixXd f = rhs(q);
        if (f.cwiseAbs().maxCoeff() <= 1e-14 * scale) break;
        Eigen::MatrixXd a = kappa + q * sigma_r_inv;
        Eigen::MatrixXd delta = solve_lyapunov(a, f);
        symmetrize(delta);
        q += delta;
        symmetrize(q);
    }
    if (rhs(q).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw NumericalError("algebraic Riccati solve did not converge");
    if (d > 0 && min_eigenvalue(q) < -1e-10)
        throw NumericalError("algebraic Riccati solution not positive semi-definite");
    return psd_clip(q, 1e-8);
}

}  // namespace driftlab
