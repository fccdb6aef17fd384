#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "driftlab/params.hpp"
#include "driftlab/rule.hpp"

namespace driftlab {

/// Gauss-Hermite rule normalized against the standard normal density:
/// integral f(u) phi(u) du ~ sum_i weights[i] f(points[i]), weights sum to 1.
struct GaussHermite {
    Eigen::VectorXd points;
    Eigen::VectorXd weights;
};
GaussHermite gauss_hermite(int order);

/// Solver lattice for the one-asset value function.
struct Grid2D {
    double m_lo = -1.0;
    double m_hi = 1.0;
    int n_m = 161;
    double q_hi = 0.02;
    int n_q = 41;
    int n_t = 65;
    double t_hi = 1.0;  ///< horizon, equal to params.T

    std::vector<double> m_axis() const;
    std::vector<double> q_axis() const;
    std::vector<double> t_axis() const;
    double dm() const { return (m_hi - m_lo) / (n_m - 1); }
    double dq() const { return n_q > 1 ? q_hi / (n_q - 1) : q_hi; }

    void validate(const ModelParams& p) const;
    static Grid2D defaults(const ModelParams& p);
};

struct SolveStats {
    long substeps = 0;
    long jump_extrapolations = 0;  ///< post-jump points held at the m boundary
    double dt = 0.0;               ///< sub-step size actually used
};

struct DpeOptions {
    std::optional<long> reg_k;     ///< adds the (1/2k) Laplacian of the regularized problem
    int gh_order = 11;
    double cfl_fraction = 0.4;     ///< explicit advection fraction of the cell crossing time
    int time_refine = 1;           ///< extra sub-step multiplier
    long max_total_substeps = 2000000;
};

/// Backward-solved value function on the lattice. The scheme runs on log V
/// internally, which keeps V positive by construction; the exported values
/// are V itself so persistence round-trips exactly.
struct ValueGrid {
    Grid2D grid;
    ModelParams params;
    std::optional<long> reg_k;
    std::vector<double> values;  ///< V at [(it*n_m + jm)*n_q + lq]
    SolveStats stats;

    double value(int it, int jm, int lq) const {
        return values[(static_cast<std::size_t>(it) * static_cast<std::size_t>(grid.n_m) +
                       static_cast<std::size_t>(jm)) *
                          static_cast<std::size_t>(grid.n_q) +
                      static_cast<std::size_t>(lq)];
    }
    double log_value(int it, int jm, int lq) const;
    /// Trilinear interpolation in log space, constant extrapolation outside.
    double value_at(double t, double m, double q) const;
};

/// Gauss-Hermite approximation of the view-arrival smoothing integral
/// int V(t, m + jump_gain(q) u, q_post(q)) phi(u) du on one time slice.
/// `v_slice(jm, lq)` holds V at the slice; post-jump covariance is clamped to
/// [0, q_hi]; post-jump means outside the m-range use the boundary value and
/// are counted in *extrapolations when given.
double jump_integral(const Eigen::MatrixXd& v_slice, const Grid2D& grid, double m, double q,
                     const ModelParams& p, int order, long* extrapolations = nullptr);

/// Solve the dynamic programming equation backward from V(T) = 1 (d = 1).
/// Implicit in the m-diffusion, explicit upwind advection of the covariance
/// block, explicit quadratic-gradient/potential/jump terms. Time step obeys
/// an advection CFL bound; violation of the step budget or loss of finite
/// values aborts with NumericalError.
ValueGrid solve_dpe(const ModelParams& p, const Grid2D& grid, const DpeOptions& opt = {});

/// Extract Pi*(t,m,q) = Sigma_R^{-1} (m + q D_m V / V) / (1 - theta) from a
/// solved grid (central log-gradient), clipped at ten times the largest
/// myopic magnitude on the grid.
DecisionRule optimal_rule(const ValueGrid& value);

/// Closed-form myopic rule with the same grid-derived clip bound.
DecisionRule myopic_rule(const ModelParams& p, const Grid2D& grid);
/// Myopic rule with the parameter-derived default clip.
DecisionRule myopic_rule(const ModelParams& p);

/// Persistence: CSV with columns t, m, q, V, Pi_star plus a JSON sidecar
/// carrying the axes, parameter snapshot and solver stats. Doubles are
/// written with 17 significant digits so a reload reproduces them exactly.
void write_value_grid(const ValueGrid& vg, const DecisionRule& rule, const std::string& csv_file,
                      const std::string& json_file);
std::pair<ValueGrid, DecisionRule> load_value_grid(const std::string& csv_file,
                                                   const std::string& json_file);

}  // namespace driftlab
