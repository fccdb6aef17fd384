#include "driftlab/dpe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "driftlab/csv.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/linalg.hpp"

namespace driftlab {

using nlohmann::json;

GaussHermite gauss_hermite(int order) {
    if (order < 1) throw ConfigError("gauss_hermite: order must be >= 1");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int i = 1; i < order; ++i) {
        const double b = std::sqrt(static_cast<double>(i) / 2.0);
        jacobi(i, i - 1) = b;
        jacobi(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    if (es.info() != Eigen::Success) throw NumericalError("gauss_hermite: eigensolve failed");
    GaussHermite gh;
    gh.points = std::sqrt(2.0) * es.eigenvalues();
    gh.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        const double v0 = es.eigenvectors()(0, i);
        gh.weights[i] = v0 * v0;
    }
    gh.weights /= gh.weights.sum();
    return gh;
}

std::vector<double> Grid2D::m_axis() const {
    std::vector<double> a(static_cast<std::size_t>(n_m));
    for (int j = 0; j < n_m; ++j) a[static_cast<std::size_t>(j)] = m_lo + dm() * j;
    a.back() = m_hi;
    return a;
}

std::vector<double> Grid2D::q_axis() const {
    std::vector<double> a(static_cast<std::size_t>(n_q));
    for (int l = 0; l < n_q; ++l) a[static_cast<std::size_t>(l)] = dq() * l;
    a.back() = q_hi;
    return a;
}

std::vector<double> Grid2D::t_axis() const {
    std::vector<double> a(static_cast<std::size_t>(n_t));
    for (int i = 0; i < n_t; ++i)
        a[static_cast<std::size_t>(i)] = t_hi * static_cast<double>(i) / (n_t - 1);
    a.back() = t_hi;
    return a;
}

void Grid2D::validate(const ModelParams& p) const {
    if (n_m < 5 || n_q < 3 || n_t < 2) throw ConfigError("Grid2D: lattice too small");
    if (m_lo >= m_hi || q_hi <= 0.0 || t_hi <= 0.0) throw ConfigError("Grid2D: bad extents");
    const double slack = 1e-9 * std::max(1.0, q_hi);
    if (q_hi + slack < row_sum_norm(p.stationary_cov()))
        throw ConfigError("Grid2D: q_hi must cover the stationary covariance");
    if (q_hi + slack < row_sum_norm(p.q0)) throw ConfigError("Grid2D: q_hi must cover q0");
    const double span = 6.0 * std::sqrt(q_hi);
    const double m0 = p.m0[0];
    const double mslack = 1e-9 * std::max(1.0, span);
    if (m_lo > m0 - span + mslack || m_hi < m0 + span - mslack)
        throw ConfigError("Grid2D: m-range must cover m0 +/- 6 sqrt(q_hi)");
}

Grid2D Grid2D::defaults(const ModelParams& p) {
    Grid2D g;
    g.q_hi = p.cov_bound();
    const double span = 6.0 * std::sqrt(g.q_hi);
    g.m_lo = std::min(p.m0[0], p.mu_bar[0]) - span;
    g.m_hi = std::max(p.m0[0], p.mu_bar[0]) + span;
    g.n_m = 161;
    g.n_q = 41;
    g.n_t = 65;
    g.t_hi = p.T;
    return g;
}

double ValueGrid::log_value(int it, int jm, int lq) const { return std::log(value(it, jm, lq)); }

namespace {

inline void bracket_axis(double lo, double step, int n, double x, int& idx, double& w) {
    if (n == 1 || x <= lo) { idx = 0; w = 0.0; return; }
    const double hi = lo + step * (n - 1);
    if (x >= hi) { idx = n - 2; w = 1.0; return; }
    double pos = (x - lo) / step;
    idx = std::min(static_cast<int>(pos), n - 2);
    w = pos - idx;
}

}  // namespace

double ValueGrid::value_at(double t, double m, double q) const {
    int it, jm, lq;
    double wt, wm, wq;
    bracket_axis(0.0, grid.t_hi / (grid.n_t - 1), grid.n_t, t, it, wt);
    bracket_axis(grid.m_lo, grid.dm(), grid.n_m, m, jm, wm);
    bracket_axis(0.0, grid.dq(), grid.n_q, q, lq, wq);
    auto plane = [&](int ti) {
        const double v00 = log_value(ti, jm, lq);
        const double v01 = log_value(ti, jm, lq + 1);
        const double v10 = log_value(ti, jm + 1, lq);
        const double v11 = log_value(ti, jm + 1, lq + 1);
        return (1.0 - wm) * ((1.0 - wq) * v00 + wq * v01) + wm * ((1.0 - wq) * v10 + wq * v11);
    };
    return std::exp((1.0 - wt) * plane(it) + wt * plane(it + 1));
}

double jump_integral(const Eigen::MatrixXd& v_slice, const Grid2D& grid, double m, double q,
                     const ModelParams& p, int order, long* extrapolations) {
    if (order < 5) throw ConfigError("jump_integral: order must be >= 5");
    if (v_slice.rows() != grid.n_m || v_slice.cols() != grid.n_q)
        throw ConfigError("jump_integral: slice shape mismatch");
    const double gamma = p.Gamma(0, 0);
    const double gain = q / std::sqrt(q + gamma);
    const double q_post = std::clamp(q * gamma / (q + gamma), 0.0, grid.q_hi);
    int lq;
    double wq;
    bracket_axis(0.0, grid.dq(), grid.n_q, q_post, lq, wq);
    GaussHermite gh = gauss_hermite(order);
    double acc = 0.0;
    for (int i = 0; i < order; ++i) {
        const double m_post = m + gain * gh.points[i];
        if (extrapolations && (m_post < grid.m_lo || m_post > grid.m_hi)) ++(*extrapolations);
        int jm;
        double wm;
        bracket_axis(grid.m_lo, grid.dm(), grid.n_m, m_post, jm, wm);
        const double v = (1.0 - wm) * ((1.0 - wq) * v_slice(jm, lq) + wq * v_slice(jm, lq + 1)) +
                         wm * ((1.0 - wq) * v_slice(jm + 1, lq) + wq * v_slice(jm + 1, lq + 1));
        acc += gh.weights[i] * v;
    }
    return acc;
}

namespace {

// Tridiagonal system with optional extra entries at (0,2) and (n-1,n-3)
// coming from one-sided second differences at the edges. The extra entries
// are eliminated against rows 1 and n-2, then a standard Thomas sweep runs.
struct EdgedTridiagonal {
    std::vector<double> sub, diag, sup;
    double corner_lo = 0.0;  // entry (0, 2)
    double corner_hi = 0.0;  // entry (n-1, n-3)

    void solve(std::vector<double>& rhs, std::vector<double>& scratch) const {
        const std::size_t n = diag.size();
        scratch.assign(3 * n, 0.0);
        double* s = scratch.data();
        double* d = s + n;
        double* u = d + n;
        for (std::size_t j = 0; j < n; ++j) {
            s[j] = sub[j];
            d[j] = diag[j];
            u[j] = sup[j];
        }
        if (corner_lo != 0.0) {
            const double f = corner_lo / u[1];
            d[0] -= f * s[1];
            u[0] -= f * d[1];
            rhs[0] -= f * rhs[1];
        }
        if (corner_hi != 0.0) {
            const double f = corner_hi / s[n - 2];
            d[n - 1] -= f * u[n - 2];
            s[n - 1] -= f * d[n - 2];
            rhs[n - 1] -= f * rhs[n - 2];
        }
        // Thomas forward sweep.
        for (std::size_t j = 1; j < n; ++j) {
            const double w = s[j] / d[j - 1];
            d[j] -= w * u[j - 1];
            rhs[j] -= w * rhs[j - 1];
        }
        rhs[n - 1] /= d[n - 1];
        for (std::size_t j = n - 1; j-- > 0;) rhs[j] = (rhs[j] - u[j] * rhs[j + 1]) / d[j];
    }
};

struct ScalarModel {
    double sig, th, kap, mubar, smu, gamma, lam;
    double a;     // th/(1-th)
    double cpot;  // th/(2(1-th) sig)
    double cgrad_base;  // 1/(2(1-th) sig), multiplies q^2 (L_m)^2

    explicit ScalarModel(const ModelParams& p)
        : sig(p.Sigma_R()(0, 0)),
          th(p.theta),
          kap(p.kappa(0, 0)),
          mubar(p.mu_bar[0]),
          smu(p.Sigma_mu()(0, 0)),
          gamma(p.Gamma(0, 0)),
          lam(p.lambda) {
        a = th / (1.0 - th);
        cpot = th / (2.0 * (1.0 - th) * sig);
        cgrad_base = 1.0 / (2.0 * (1.0 - th) * sig);
    }

    double adv_m(double m, double q) const { return kap * (mubar - m) + a * q * m / sig; }
    double adv_g(double q) const { return smu - 2.0 * kap * q - q * q / sig; }
};

}  // namespace

ValueGrid solve_dpe(const ModelParams& p, const Grid2D& grid, const DpeOptions& opt) {
    if (p.d != 1) throw ConfigError("solve_dpe: lattice solver is single-asset only");
    grid.validate(p);
    if (std::abs(grid.t_hi - p.T) > 1e-12 * std::max(1.0, p.T))
        throw ConfigError("solve_dpe: grid horizon must equal params.T");
    if (opt.reg_k && *opt.reg_k < 1) throw ConfigError("solve_dpe: reg_k must be >= 1");

    const ScalarModel sm(p);
    const int n_m = grid.n_m, n_q = grid.n_q, n_t = grid.n_t;
    const double dm = grid.dm(), dg = grid.dq();
    const std::vector<double> ms = grid.m_axis(), qs = grid.q_axis();
    const double reg_diff = opt.reg_k ? 0.5 / static_cast<double>(*opt.reg_k) : 0.0;

    // Sub-step size from the explicit pieces: covariance advection and the
    // jump bracket. The implicit diffusion sets no constraint.
    double v_max = 0.0;
    for (double q : qs) v_max = std::max(v_max, std::abs(sm.adv_g(q)));
    double dt_bound = grid.t_hi / (n_t - 1);
    if (v_max > 0.0) dt_bound = std::min(dt_bound, opt.cfl_fraction * dg / v_max);
    if (sm.lam > 0.0) dt_bound = std::min(dt_bound, 0.5 / sm.lam);
    const double slice_dt = grid.t_hi / (n_t - 1);
    long n_sub = static_cast<long>(std::ceil(slice_dt / dt_bound - 1e-12)) * opt.time_refine;
    n_sub = std::max<long>(1, n_sub);
    if (n_sub * (n_t - 1) > opt.max_total_substeps)
        throw NumericalError(
            "solve_dpe: advection CFL requires " + std::to_string(n_sub * (n_t - 1)) +
            " sub-steps, above the budget; coarsen the covariance axis or raise the budget");
    const double dt = slice_dt / static_cast<double>(n_sub);

    // Implicit m-operator per covariance level (time-independent).
    std::vector<EdgedTridiagonal> msys(static_cast<std::size_t>(n_q));
    for (int l = 0; l < n_q; ++l) {
        const double q = qs[static_cast<std::size_t>(l)];
        const double diff = q * q / (2.0 * sm.sig) + reg_diff;
        auto& sys = msys[static_cast<std::size_t>(l)];
        sys.sub.assign(static_cast<std::size_t>(n_m), 0.0);
        sys.diag.assign(static_cast<std::size_t>(n_m), 0.0);
        sys.sup.assign(static_cast<std::size_t>(n_m), 0.0);
        for (int j = 0; j < n_m; ++j) {
            const double adv = sm.adv_m(ms[static_cast<std::size_t>(j)], q);
            double a_diag = 0.0, a_sub = 0.0, a_sup = 0.0, a_corner = 0.0;
            if (j == 0) {
                a_diag += diff / (dm * dm) - adv / dm;
                a_sup += -2.0 * diff / (dm * dm) + adv / dm;
                a_corner = diff / (dm * dm);
                sys.corner_lo = -dt * a_corner;
            } else if (j == n_m - 1) {
                a_diag += diff / (dm * dm) + adv / dm;
                a_sub += -2.0 * diff / (dm * dm) - adv / dm;
                a_corner = diff / (dm * dm);
                sys.corner_hi = -dt * a_corner;
            } else {
                a_diag = -2.0 * diff / (dm * dm);
                a_sub = diff / (dm * dm);
                a_sup = diff / (dm * dm);
                const bool central = diff > 0.0 && std::abs(adv) * dm <= 2.0 * diff;
                if (central) {
                    a_sup += adv / (2.0 * dm);
                    a_sub -= adv / (2.0 * dm);
                } else if (adv >= 0.0) {
                    a_sup += adv / dm;
                    a_diag -= adv / dm;
                } else {
                    a_sub -= adv / dm;
                    a_diag += adv / dm;
                }
            }
            sys.diag[static_cast<std::size_t>(j)] = 1.0 - dt * a_diag;
            sys.sub[static_cast<std::size_t>(j)] = -dt * a_sub;
            sys.sup[static_cast<std::size_t>(j)] = -dt * a_sup;
        }
    }

    // Implicit covariance-direction diffusion for the regularized equation.
    EdgedTridiagonal gsys;
    if (opt.reg_k) {
        const double diff = reg_diff;
        gsys.sub.assign(static_cast<std::size_t>(n_q), 0.0);
        gsys.diag.assign(static_cast<std::size_t>(n_q), 0.0);
        gsys.sup.assign(static_cast<std::size_t>(n_q), 0.0);
        for (int l = 0; l < n_q; ++l) {
            double a_diag, a_sub = 0.0, a_sup = 0.0;
            if (l == 0) {
                a_diag = diff / (dg * dg);
                a_sup = -2.0 * diff / (dg * dg);
                gsys.corner_lo = -dt * (diff / (dg * dg));
            } else if (l == n_q - 1) {
                a_diag = diff / (dg * dg);
                a_sub = -2.0 * diff / (dg * dg);
                gsys.corner_hi = -dt * (diff / (dg * dg));
            } else {
                a_diag = -2.0 * diff / (dg * dg);
                a_sub = diff / (dg * dg);
                a_sup = diff / (dg * dg);
            }
            gsys.diag[static_cast<std::size_t>(l)] = 1.0 - dt * a_diag;
            gsys.sub[static_cast<std::size_t>(l)] = -dt * a_sub;
            gsys.sup[static_cast<std::size_t>(l)] = -dt * a_sup;
        }
    }

    // Jump geometry per covariance level.
    GaussHermite gh = gauss_hermite(opt.gh_order);
    std::vector<double> jump_gain(static_cast<std::size_t>(n_q)), jump_wq(static_cast<std::size_t>(n_q));
    std::vector<int> jump_lq(static_cast<std::size_t>(n_q));
    for (int l = 0; l < n_q; ++l) {
        const double q = qs[static_cast<std::size_t>(l)];
        jump_gain[static_cast<std::size_t>(l)] = q / std::sqrt(q + sm.gamma);
        const double q_post = std::clamp(q * sm.gamma / (q + sm.gamma), 0.0, grid.q_hi);
        bracket_axis(0.0, dg, n_q, q_post, jump_lq[static_cast<std::size_t>(l)],
                     jump_wq[static_cast<std::size_t>(l)]);
    }

    ValueGrid vg;
    vg.grid = grid;
    vg.params = p;
    vg.reg_k = opt.reg_k;
    vg.values.assign(static_cast<std::size_t>(n_t) * n_m * n_q, 1.0);
    vg.stats.dt = dt;

    const std::size_t slice_sz = static_cast<std::size_t>(n_m) * n_q;
    std::vector<double> cur(slice_sz, 0.0);   // log V at the time being advanced
    std::vector<double> stage(slice_sz, 0.0);
    std::vector<double> col(static_cast<std::size_t>(std::max(n_m, n_q)));
    std::vector<double> scratch;
    auto at = [&](std::vector<double>& buf, int j, int l) -> double& {
        return buf[static_cast<std::size_t>(l) * n_m + static_cast<std::size_t>(j)];
    };

    // Terminal slice: V = 1, log V = 0 (already zero-filled).
    for (int s = n_t - 2; s >= 0; --s) {
        for (long step = 0; step < n_sub; ++step) {
            // Explicit stage.
            for (int l = 0; l < n_q; ++l) {
                const double q = qs[static_cast<std::size_t>(l)];
                const double vg_adv = sm.adv_g(q);
                const double cgrad = sm.cgrad_base * q * q + reg_diff;
                const double gain = jump_gain[static_cast<std::size_t>(l)];
                const int plq = jump_lq[static_cast<std::size_t>(l)];
                const double pwq = jump_wq[static_cast<std::size_t>(l)];
                for (int j = 0; j < n_m; ++j) {
                    const double lc = at(cur, j, l);
                    double e = sm.cpot * ms[static_cast<std::size_t>(j)] * ms[static_cast<std::size_t>(j)];
                    // covariance advection, upwind
                    if (vg_adv > 0.0) {
                        const int lp = std::min(l + 1, n_q - 1);
                        e += vg_adv * (at(cur, j, lp) - lc) / dg;
                    } else if (vg_adv < 0.0) {
                        const int lm = std::max(l - 1, 0);
                        e += vg_adv * (lc - at(cur, j, lm)) / dg;
                    }
                    // quadratic gradient term
                    double dmv;
                    if (j == 0)
                        dmv = (at(cur, 1, l) - lc) / dm;
                    else if (j == n_m - 1)
                        dmv = (lc - at(cur, n_m - 2, l)) / dm;
                    else
                        dmv = (at(cur, j + 1, l) - at(cur, j - 1, l)) / (2.0 * dm);
                    e += cgrad * dmv * dmv;
                    if (opt.reg_k) {
                        double dgv;
                        if (l == 0)
                            dgv = (at(cur, j, 1) - lc) / dg;
                        else if (l == n_q - 1)
                            dgv = (lc - at(cur, j, n_q - 2)) / dg;
                        else
                            dgv = (at(cur, j, l + 1) - at(cur, j, l - 1)) / (2.0 * dg);
                        e += reg_diff * dgv * dgv;
                    }
                    // view-arrival bracket
                    if (sm.lam > 0.0) {
                        double integ = 0.0;
                        for (int i = 0; i < opt.gh_order; ++i) {
                            const double m_post =
                                ms[static_cast<std::size_t>(j)] + gain * gh.points[i];
                            if (m_post < grid.m_lo || m_post > grid.m_hi)
                                ++vg.stats.jump_extrapolations;
                            int jp;
                            double wm;
                            bracket_axis(grid.m_lo, dm, n_m, m_post, jp, wm);
                            const double lv =
                                (1.0 - wm) * ((1.0 - pwq) * at(cur, jp, plq) +
                                              pwq * at(cur, jp, plq + 1)) +
                                wm * ((1.0 - pwq) * at(cur, jp + 1, plq) +
                                      pwq * at(cur, jp + 1, plq + 1));
                            integ += gh.weights[i] * std::exp(lv - lc);
                        }
                        e += sm.lam * (integ - 1.0);
                    }
                    at(stage, j, l) = lc + dt * e;
                }
            }
            // Implicit mean-direction solve per covariance level.
            for (int l = 0; l < n_q; ++l) {
                col.assign(col.size(), 0.0);
                col.resize(static_cast<std::size_t>(n_m));
                for (int j = 0; j < n_m; ++j) col[static_cast<std::size_t>(j)] = at(stage, j, l);
                msys[static_cast<std::size_t>(l)].solve(col, scratch);
                for (int j = 0; j < n_m; ++j) at(cur, j, l) = col[static_cast<std::size_t>(j)];
            }
            // Implicit covariance-direction diffusion for the regularized run.
            if (opt.reg_k) {
                for (int j = 0; j < n_m; ++j) {
                    col.resize(static_cast<std::size_t>(n_q));
                    for (int l = 0; l < n_q; ++l) col[static_cast<std::size_t>(l)] = at(cur, j, l);
                    gsys.solve(col, scratch);
                    for (int l = 0; l < n_q; ++l) at(cur, j, l) = col[static_cast<std::size_t>(l)];
                }
            }
            ++vg.stats.substeps;
        }
        for (double v : cur)
            if (!std::isfinite(v))
                throw NumericalError("solve_dpe: scheme failure (non-finite value); theta=" +
                                     std::to_string(p.theta) + " lambda=" + std::to_string(p.lambda) +
                                     " n_m=" + std::to_string(n_m) + " n_q=" + std::to_string(n_q) +
                                     " dt=" + std::to_string(dt));
        // Work layout is covariance-major; the exported layout is mean-major.
        double* out = vg.values.data() + static_cast<std::ptrdiff_t>(s) * static_cast<std::ptrdiff_t>(slice_sz);
        for (int j = 0; j < n_m; ++j)
            for (int l = 0; l < n_q; ++l)
                out[static_cast<std::size_t>(j) * n_q + static_cast<std::size_t>(l)] =
                    std::exp(at(cur, j, l));
    }
    return vg;
}

namespace {

double grid_clip_bound(const ModelParams& p, const Grid2D& grid) {
    const double m_abs = std::max(std::abs(grid.m_lo), std::abs(grid.m_hi));
    return 10.0 * m_abs / ((1.0 - p.theta) * p.Sigma_R()(0, 0));
}

}  // namespace

DecisionRule optimal_rule(const ValueGrid& vg) {
    const ModelParams& p = vg.params;
    const Grid2D& grid = vg.grid;
    const double dm = grid.dm();
    RuleTable table;
    table.t_axis = grid.t_axis();
    table.m_axis = grid.m_axis();
    table.q_axis = grid.q_axis();
    table.values.resize(static_cast<std::size_t>(grid.n_t) * grid.n_m * grid.n_q);
    const double gain = 1.0 / ((1.0 - p.theta) * p.Sigma_R()(0, 0));
    const double clip = grid_clip_bound(p, grid);
    std::size_t idx = 0;
    for (int it = 0; it < grid.n_t; ++it)
        for (int j = 0; j < grid.n_m; ++j)
            for (int l = 0; l < grid.n_q; ++l) {
                if (vg.value(it, j, l) < 1e-300)
                    throw NumericalError("optimal_rule: value underflow guard tripped");
                double dlm;
                if (j == 0)
                    dlm = (vg.log_value(it, 1, l) - vg.log_value(it, 0, l)) / dm;
                else if (j == grid.n_m - 1)
                    dlm = (vg.log_value(it, j, l) - vg.log_value(it, j - 1, l)) / dm;
                else
                    dlm = (vg.log_value(it, j + 1, l) - vg.log_value(it, j - 1, l)) / (2.0 * dm);
                const double m = table.m_axis[static_cast<std::size_t>(j)];
                const double q = table.q_axis[static_cast<std::size_t>(l)];
                table.values[idx++] = std::clamp(gain * (m + q * dlm), -clip, clip);
            }
    return DecisionRule::grid(std::move(table), clip);
}

DecisionRule myopic_rule(const ModelParams& p, const Grid2D& grid) {
    return DecisionRule::myopic(p, grid_clip_bound(p, grid));
}

DecisionRule myopic_rule(const ModelParams& p) { return DecisionRule::myopic(p, default_clip(p)); }

namespace {

json params_to_json(const ModelParams& p) {
    auto mat = [](const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            json r = json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
            rows.push_back(r);
        }
        return rows;
    };
    auto vec = [](const Eigen::VectorXd& v) {
        json r = json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) r.push_back(v[i]);
        return r;
    };
    return json{{"d", p.d},         {"d1", p.d1},
                {"d2", p.d2},       {"kappa", mat(p.kappa)},
                {"mu_bar", vec(p.mu_bar)}, {"sigma_mu", mat(p.sigma_mu)},
                {"sigma_R", mat(p.sigma_R)}, {"Gamma", mat(p.Gamma)},
                {"lambda", p.lambda}, {"theta", p.theta},
                {"T", p.T},         {"m0", vec(p.m0)},
                {"q0", mat(p.q0)},  {"x0", p.x0}};
}

ModelParams params_from_json(const json& j) {
    ModelParams p;
    p.d = j.at("d").get<int>();
    p.d1 = j.at("d1").get<int>();
    p.d2 = j.at("d2").get<int>();
    auto mat = [](const json& rows) {
        Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows[0].size());
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index jj = 0; jj < m.cols(); ++jj)
                m(i, jj) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(jj)].get<double>();
        return m;
    };
    auto vec = [](const json& arr) {
        Eigen::VectorXd v(arr.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = arr[static_cast<std::size_t>(i)].get<double>();
        return v;
    };
    p.kappa = mat(j.at("kappa"));
    p.mu_bar = vec(j.at("mu_bar"));
    p.sigma_mu = mat(j.at("sigma_mu"));
    p.sigma_R = mat(j.at("sigma_R"));
    p.Gamma = mat(j.at("Gamma"));
    p.lambda = j.at("lambda").get<double>();
    p.theta = j.at("theta").get<double>();
    p.T = j.at("T").get<double>();
    p.m0 = vec(j.at("m0"));
    p.q0 = mat(j.at("q0"));
    p.x0 = j.at("x0").get<double>();
    p.validate(false);
    return p;
}

}  // namespace

void write_value_grid(const ValueGrid& vg, const DecisionRule& rule, const std::string& csv_file,
                      const std::string& json_file) {
    CsvWriter csv(csv_file, {"t", "m", "q", "V", "Pi_star"});
    const auto ts = vg.grid.t_axis();
    const auto ms = vg.grid.m_axis();
    const auto qs = vg.grid.q_axis();
    const RuleTable& table = rule.table();
    std::size_t idx = 0;
    for (int it = 0; it < vg.grid.n_t; ++it)
        for (int j = 0; j < vg.grid.n_m; ++j)
            for (int l = 0; l < vg.grid.n_q; ++l)
                csv.row({ts[static_cast<std::size_t>(it)], ms[static_cast<std::size_t>(j)],
                         qs[static_cast<std::size_t>(l)], vg.value(it, j, l),
                         table.values[idx++]});

    json side{{"grid",
               {{"m_lo", vg.grid.m_lo},
                {"m_hi", vg.grid.m_hi},
                {"n_m", vg.grid.n_m},
                {"q_hi", vg.grid.q_hi},
                {"n_q", vg.grid.n_q},
                {"n_t", vg.grid.n_t},
                {"t_hi", vg.grid.t_hi}}},
              {"params", params_to_json(vg.params)},
              {"clip", rule.clip_bound()},
              {"stats",
               {{"substeps", vg.stats.substeps},
                {"jump_extrapolations", vg.stats.jump_extrapolations},
                {"dt", vg.stats.dt}}}};
    if (vg.reg_k) side["reg_k"] = *vg.reg_k;
    std::ofstream out(json_file);
    if (!out) throw ConfigError("cannot write sidecar: " + json_file);
    out << side.dump(2) << '\n';
}

std::pair<ValueGrid, DecisionRule> load_value_grid(const std::string& csv_file,
                                                   const std::string& json_file) {
    std::ifstream in(json_file);
    if (!in) throw ConfigError("cannot read sidecar: " + json_file);
    json side = json::parse(in);
    ValueGrid vg;
    const auto& g = side.at("grid");
    vg.grid.m_lo = g.at("m_lo").get<double>();
    vg.grid.m_hi = g.at("m_hi").get<double>();
    vg.grid.n_m = g.at("n_m").get<int>();
    vg.grid.q_hi = g.at("q_hi").get<double>();
    vg.grid.n_q = g.at("n_q").get<int>();
    vg.grid.n_t = g.at("n_t").get<int>();
    vg.grid.t_hi = g.at("t_hi").get<double>();
    vg.params = params_from_json(side.at("params"));
    if (side.contains("reg_k")) vg.reg_k = side.at("reg_k").get<long>();
    vg.stats.substeps = side.at("stats").at("substeps").get<long>();
    vg.stats.jump_extrapolations = side.at("stats").at("jump_extrapolations").get<long>();
    vg.stats.dt = side.at("stats").at("dt").get<double>();

    CsvTable table = read_csv(csv_file);
    const std::size_t expect =
        static_cast<std::size_t>(vg.grid.n_t) * vg.grid.n_m * vg.grid.n_q;
    if (table.rows.size() != expect) throw ConfigError("value grid CSV has wrong row count");
    vg.values.resize(expect);
    RuleTable rt;
    rt.t_axis = vg.grid.t_axis();
    rt.m_axis = vg.grid.m_axis();
    rt.q_axis = vg.grid.q_axis();
    rt.values.resize(expect);
    for (std::size_t r = 0; r < expect; ++r) {
        vg.values[r] = std::stod(table.rows[r][3]);
        rt.values[r] = std::stod(table.rows[r][4]);
    }
    const double clip = side.at("clip").get<double>();
    return {std::move(vg), DecisionRule::grid(std::move(rt), clip)};
}

}  // namespace driftlab
