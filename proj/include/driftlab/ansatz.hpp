#pragma once

#include <vector>

#include "driftlab/dpe.hpp"
#include "driftlab/params.hpp"

namespace driftlab {

/// Independent benchmark for jump-free (lambda = 0) single-asset problems.
///
/// Without view arrivals the covariance coordinate moves along a
/// deterministic characteristic and the value function closes over
/// exp(A + B m + C m^2). The coefficient functions solve a scalar ODE system
/// along each characteristic, integrated here with a fine fourth-order
/// method that shares nothing with the lattice solver.
struct AnsatzSolution {
    Grid2D grid;
    double theta = 0.0;
    double sig = 0.0;  // Sigma_R
    std::vector<double> a, b, c;  ///< per (it * n_q + lq)

    double coeff_a(int it, int lq) const { return a[static_cast<std::size_t>(it) * grid.n_q + lq]; }
    double coeff_b(int it, int lq) const { return b[static_cast<std::size_t>(it) * grid.n_q + lq]; }
    double coeff_c(int it, int lq) const { return c[static_cast<std::size_t>(it) * grid.n_q + lq]; }

    double log_value(int it, int lq, double m) const {
        return coeff_a(it, lq) + coeff_b(it, lq) * m + coeff_c(it, lq) * m * m;
    }
    double value(int it, int lq, double m) const;
    /// Optimal rule implied by the closed form, unclipped.
    double rule(int it, int lq, double m) const;
};

/// Integrate the benchmark on the lattice axes. Requires lambda = 0, d = 1.
/// fine_steps_per_unit controls the ODE resolution (per unit of time).
AnsatzSolution solve_ansatz(const ModelParams& p, const Grid2D& grid,
                            int fine_steps_per_unit = 4000);

/// Largest relative value error of a solved lattice against the benchmark
/// over the inner half of the (m, q) axes, all time slices.
double ansatz_max_rel_error(const ValueGrid& vg, const AnsatzSolution& oracle);

}  // namespace driftlab
