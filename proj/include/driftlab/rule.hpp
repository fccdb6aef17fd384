#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "driftlab/params.hpp"
#include "driftlab/state.hpp"

namespace driftlab {

/// Interpolated rule table on a (t, m, q) lattice, single-asset case.
struct RuleTable {
    std::vector<double> t_axis;
    std::vector<double> m_axis;
    std::vector<double> q_axis;
    /// values[(it * n_m + jm) * n_q + lq]
    std::vector<double> values;

    double at(int it, int jm, int lq) const {
        return values[(static_cast<std::size_t>(it) * m_axis.size() + static_cast<std::size_t>(jm)) *
                          q_axis.size() +
                      static_cast<std::size_t>(lq)];
    }
};

/// Markov decision rule p = Pi(t, y). Every rule carries a hard clip bound L
/// applied componentwise, which enforces the linear-growth and integrability
/// requirements of admissibility by construction.
class DecisionRule {
public:
    enum class Kind { Zero, Constant, Myopic, Grid };

    static DecisionRule zero(int d);
    static DecisionRule constant(const Eigen::VectorXd& value, double clip);
    /// Full-information rule Sigma_R^{-1} m / (1 - theta).
    static DecisionRule myopic(const ModelParams& p, double clip);
    static DecisionRule grid(RuleTable table, double clip);

    Eigen::VectorXd eval(double t, const VecState& y) const;
    /// Scalar fast path, d = 1 rules only.
    double eval1(double t, double m, double q) const;

    Kind kind() const { return kind_; }
    std::string kind_name() const;
    double clip_bound() const { return clip_; }
    const RuleTable& table() const;

private:
    DecisionRule() = default;
    Kind kind_ = Kind::Zero;
    int d_ = 1;
    double clip_ = 0.0;
    Eigen::VectorXd value_;                 // Constant
    Eigen::MatrixXd myopic_gain_;           // Sigma_R^{-1} / (1 - theta)
    RuleTable table_;                       // Grid
};

/// Default clip bound when no solved grid is available: ten times the
/// myopic rule magnitude at the edge of the plausible mean range.
double default_clip(const ModelParams& p);

}  // namespace driftlab
