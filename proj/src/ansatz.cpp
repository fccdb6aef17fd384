#include "driftlab/ansatz.hpp"

#include <cmath>

#include "driftlab/errors.hpp"

namespace driftlab {

double AnsatzSolution::value(int it, int lq, double m) const {
    return std::exp(log_value(it, lq, m));
}

double AnsatzSolution::rule(int it, int lq, double m) const {
    const double q = grid.dq() * lq;
    const double slope = coeff_b(it, lq) + 2.0 * coeff_c(it, lq) * m;
    return (m + q * slope) / ((1.0 - theta) * sig);
}

AnsatzSolution solve_ansatz(const ModelParams& p, const Grid2D& grid, int fine_steps_per_unit) {
    if (p.d != 1) throw ConfigError("solve_ansatz: single-asset only");
    if (p.lambda != 0.0) throw ConfigError("solve_ansatz: requires lambda = 0");
    if (fine_steps_per_unit < 16) throw ConfigError("solve_ansatz: resolution too coarse");

    const double sig = p.Sigma_R()(0, 0);
    const double smu = p.Sigma_mu()(0, 0);
    const double kap = p.kappa(0, 0);
    const double mubar = p.mu_bar[0];
    const double th = p.theta;
    const double aa = th / (1.0 - th);
    const double cc = 1.0 / (2.0 * (1.0 - th));

    AnsatzSolution sol;
    sol.grid = grid;
    sol.theta = th;
    sol.sig = sig;
    const std::size_t total = static_cast<std::size_t>(grid.n_t) * grid.n_q;
    sol.a.assign(total, 0.0);
    sol.b.assign(total, 0.0);
    sol.c.assign(total, 0.0);

    const auto ts = grid.t_axis();
    const auto qs = grid.q_axis();
    auto q_flow = [&](double q) { return smu - 2.0 * kap * q - q * q / sig; };

    std::vector<double> qpath;
    for (int it = 0; it < grid.n_t; ++it) {
        const double span = grid.t_hi - ts[static_cast<std::size_t>(it)];
        if (span <= 0.0) continue;  // terminal slice stays (0, 0, 0)
        const int n_f = std::max(1, static_cast<int>(std::ceil(span * fine_steps_per_unit)));
        const double h = span / n_f;
        for (int lq = 0; lq < grid.n_q; ++lq) {
            // covariance characteristic forward from (t_it, q_lq), half-step storage
            qpath.assign(static_cast<std::size_t>(2 * n_f) + 1, 0.0);
            qpath[0] = qs[static_cast<std::size_t>(lq)];
            for (int r = 0; r < 2 * n_f; ++r) {
                const double hh = h / 2.0;
                const double x = qpath[static_cast<std::size_t>(r)];
                const double k1 = q_flow(x);
                const double k2 = q_flow(x + 0.5 * hh * k1);
                const double k3 = q_flow(x + 0.5 * hh * k2);
                const double k4 = q_flow(x + hh * k3);
                qpath[static_cast<std::size_t>(r) + 1] =
                    x + (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            // coefficient system backward from the terminal condition
            double A = 0.0, B = 0.0, C = 0.0;
            auto deriv = [&](double q, double bb, double ccoef, double& dA, double& dB,
                             double& dC) {
                const double q2s = q * q / sig;
                dA = -(kap * mubar * bb + q2s * ccoef + cc * q2s * bb * bb);
                dB = kap * bb - 2.0 * kap * mubar * ccoef - aa * (q / sig) * bb -
                     4.0 * cc * q2s * bb * ccoef;
                dC = 2.0 * kap * ccoef - 2.0 * aa * (q / sig) * ccoef - 4.0 * cc * q2s * ccoef * ccoef -
                     aa / (2.0 * sig);
            };
            for (int r = n_f - 1; r >= 0; --r) {
                const double q_hi_pt = qpath[static_cast<std::size_t>(2 * r + 2)];
                const double q_mid = qpath[static_cast<std::size_t>(2 * r + 1)];
                const double q_lo_pt = qpath[static_cast<std::size_t>(2 * r)];
                double dA1, dB1, dC1, dA2, dB2, dC2, dA3, dB3, dC3, dA4, dB4, dC4;
                deriv(q_hi_pt, B, C, dA1, dB1, dC1);
                deriv(q_mid, B - 0.5 * h * dB1, C - 0.5 * h * dC1, dA2, dB2, dC2);
                deriv(q_mid, B - 0.5 * h * dB2, C - 0.5 * h * dC2, dA3, dB3, dC3);
                deriv(q_lo_pt, B - h * dB3, C - h * dC3, dA4, dB4, dC4);
                A -= (h / 6.0) * (dA1 + 2.0 * dA2 + 2.0 * dA3 + dA4);
                B -= (h / 6.0) * (dB1 + 2.0 * dB2 + 2.0 * dB3 + dB4);
                C -= (h / 6.0) * (dC1 + 2.0 * dC2 + 2.0 * dC3 + dC4);
            }
            if (!std::isfinite(A) || !std::isfinite(B) || !std::isfinite(C))
                throw NumericalError("solve_ansatz: coefficient blow-up (ill-posed horizon)");
            const std::size_t idx = static_cast<std::size_t>(it) * grid.n_q + lq;
            sol.a[idx] = A;
            sol.b[idx] = B;
            sol.c[idx] = C;
        }
    }
    return sol;
}

double ansatz_max_rel_error(const ValueGrid& vg, const AnsatzSolution& oracle) {
    const Grid2D& g = vg.grid;
    const auto ms = g.m_axis();
    double worst = 0.0;
    const int j_lo = g.n_m / 4, j_hi = g.n_m - g.n_m / 4;
    const int l_hi = g.n_q / 2;
    for (int it = 0; it < g.n_t; ++it)
        for (int j = j_lo; j <= j_hi; ++j)
            for (int l = 0; l <= l_hi; ++l) {
                const double ref = oracle.value(it, l, ms[static_cast<std::size_t>(j)]);
                const double err = std::abs(vg.value(it, j, l) - ref) / std::abs(ref);
                worst = std::max(worst, err);
            }
    return worst;
}

}  // namespace driftlab
