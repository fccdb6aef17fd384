#pragma once

#include <Eigen/Dense>

namespace driftlab {

/// Symmetrize in place: A <- (A + A^T)/2.
inline void symmetrize(Eigen::MatrixXd& a) { a = ((a + a.transpose()) * 0.5).eval(); }

/// Row-sum norm (operator norm induced by the max norm on vectors).
inline double row_sum_norm(const Eigen::MatrixXd& a) {
    return a.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Symmetric square root via eigendecomposition, eigenvalues below zero
/// clipped at zero (tolerance 1e-12 relative to the largest eigenvalue).
Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& a);

/// Inverse square root of a symmetric matrix. Eigenvalues are floored at
/// `floor` before inversion so the map stays total on slightly indefinite
/// inputs (the extension region of the regularized state space).
Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& a, double floor = 1e-10);

/// Inverse of a symmetric matrix with the same eigenvalue floor.
Eigen::MatrixXd sym_inv(const Eigen::MatrixXd& a, double floor = 1e-10);

/// Clip negative eigenvalues of a symmetric matrix to zero. Eigenvalues below
/// -abort_tol throw NumericalError; values in [-abort_tol, 0) are clipped.
Eigen::MatrixXd psd_clip(const Eigen::MatrixXd& a, double abort_tol = 1e-8);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& a);

/// True if all eigenvalues of a (general) matrix have real part > tol.
bool eigenvalues_have_positive_real_part(const Eigen::MatrixXd& a, double tol = 0.0);

/// Solve A X + X A^T = C for X (Sylvester/Lyapunov form) by dense
/// Kronecker linearization. Intended for small d (state dimensions <= 4).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c);

}  // namespace driftlab
