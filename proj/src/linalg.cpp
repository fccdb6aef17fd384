#include "driftlab/linalg.hpp"

#include <cmath>

#include "driftlab/errors.hpp"

namespace driftlab {

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sym_eigen(const Eigen::MatrixXd& a) {
    Eigen::MatrixXd s = (a + a.transpose()) * 0.5;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition failed");
    return es;
}

}  // namespace

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& a) {
    auto es = sym_eigen(a);
    Eigen::VectorXd ev = es.eigenvalues();
    const double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < -tol) throw NumericalError("sym_sqrt: matrix is not positive semi-definite");
        ev[i] = std::sqrt(std::max(ev[i], 0.0));
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& a, double floor) {
    auto es = sym_eigen(a);
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = 1.0 / std::sqrt(std::max(ev[i], floor));
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd sym_inv(const Eigen::MatrixXd& a, double floor) {
    auto es = sym_eigen(a);
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = 1.0 / std::max(ev[i], floor);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd psd_clip(const Eigen::MatrixXd& a, double abort_tol) {
    auto es = sym_eigen(a);
    Eigen::VectorXd ev = es.eigenvalues();
    if (ev.minCoeff() >= 0.0) return (a + a.transpose()) * 0.5;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < -abort_tol)
            throw NumericalError("covariance lost positive semi-definiteness (min eigenvalue " +
                                 std::to_string(ev[i]) + ")");
        ev[i] = std::max(ev[i], 0.0);
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double min_eigenvalue(const Eigen::MatrixXd& a) { return sym_eigen(a).eigenvalues().minCoeff(); }

bool eigenvalues_have_positive_real_part(const Eigen::MatrixXd& a, double tol) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    return (es.eigenvalues().real().array() > tol).all();
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c) {
    const Eigen::Index d = a.rows();
    const Eigen::Index n = d * d;
    // vec(AX + XA^T) = (I (x) A + A (x) I) vec(X), column-major vec.
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
    for (Eigen::Index j = 0; j < d; ++j) k.block(j * d, j * d, d, d) = a;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) k.block(i * d, j * d, d, d) += a(i, j) * id;
    Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(c.data(), n);
    Eigen::VectorXd x = k.fullPivLu().solve(rhs);
    return Eigen::Map<const Eigen::MatrixXd>(x.data(), d, d);
}

}  // namespace driftlab
