#include "driftlab/rule.hpp"

#include <algorithm>
#include <cmath>

#include "driftlab/errors.hpp"
#include "driftlab/linalg.hpp"

namespace driftlab {

namespace {

// Bracketing index and weight for linear interpolation with constant
// extrapolation outside the axis.
inline void bracket(const std::vector<double>& axis, double x, int& lo, double& w) {
    const int n = static_cast<int>(axis.size());
    if (n == 1 || x <= axis.front()) { lo = 0; w = 0.0; return; }
    if (x >= axis.back()) { lo = n - 2; w = 1.0; return; }
    auto it = std::upper_bound(axis.begin(), axis.end(), x);
    lo = static_cast<int>(it - axis.begin()) - 1;
    w = (x - axis[static_cast<std::size_t>(lo)]) /
        (axis[static_cast<std::size_t>(lo) + 1] - axis[static_cast<std::size_t>(lo)]);
}

inline double clamp_to(double v, double c) { return std::clamp(v, -c, c); }

}  // namespace

DecisionRule DecisionRule::zero(int d) {
    DecisionRule r;
    r.kind_ = Kind::Zero;
    r.d_ = d;
    r.clip_ = 0.0;
    return r;
}

DecisionRule DecisionRule::constant(const Eigen::VectorXd& value, double clip) {
    if (clip < 0.0) throw ConfigError("DecisionRule: clip bound must be >= 0");
    DecisionRule r;
    r.kind_ = Kind::Constant;
    r.d_ = static_cast<int>(value.size());
    r.clip_ = clip;
    r.value_ = value.cwiseMax(-clip).cwiseMin(clip);
    return r;
}

DecisionRule DecisionRule::myopic(const ModelParams& p, double clip) {
    if (clip <= 0.0) throw ConfigError("DecisionRule: clip bound must be positive");
    DecisionRule r;
    r.kind_ = Kind::Myopic;
    r.d_ = p.d;
    r.clip_ = clip;
    r.myopic_gain_ = p.Sigma_R_inv() / (1.0 - p.theta);
    return r;
}

DecisionRule DecisionRule::grid(RuleTable table, double clip) {
    if (clip <= 0.0) throw ConfigError("DecisionRule: clip bound must be positive");
    if (table.t_axis.empty() || table.m_axis.empty() || table.q_axis.empty())
        throw ConfigError("DecisionRule: empty rule table");
    if (table.values.size() != table.t_axis.size() * table.m_axis.size() * table.q_axis.size())
        throw ConfigError("DecisionRule: rule table size mismatch");
    DecisionRule r;
    r.kind_ = Kind::Grid;
    r.d_ = 1;
    r.clip_ = clip;
    r.table_ = std::move(table);
    return r;
}

Eigen::VectorXd DecisionRule::eval(double t, const VecState& y) const {
    switch (kind_) {
        case Kind::Zero:
            return Eigen::VectorXd::Zero(d_);
        case Kind::Constant:
            return value_;
        case Kind::Myopic:
            return (myopic_gain_ * y.m).cwiseMax(-clip_).cwiseMin(clip_);
        case Kind::Grid: {
            Eigen::VectorXd out(1);
            out[0] = eval1(t, y.m[0], y.g[0]);
            return out;
        }
    }
    throw ConfigError("DecisionRule: unknown kind");
}

double DecisionRule::eval1(double t, double m, double q) const {
    switch (kind_) {
        case Kind::Zero:
            return 0.0;
        case Kind::Constant:
            return value_[0];
        case Kind::Myopic:
            return clamp_to(myopic_gain_(0, 0) * m, clip_);
        case Kind::Grid: {
            int it, jm, lq;
            double wt, wm, wq;
            bracket(table_.t_axis, t, it, wt);
            bracket(table_.m_axis, m, jm, wm);
            bracket(table_.q_axis, q, lq, wq);
            const int it1 = std::min<int>(it + 1, static_cast<int>(table_.t_axis.size()) - 1);
            const int jm1 = std::min<int>(jm + 1, static_cast<int>(table_.m_axis.size()) - 1);
            const int lq1 = std::min<int>(lq + 1, static_cast<int>(table_.q_axis.size()) - 1);
            auto plane = [&](int ti) {
                const double v00 = table_.at(ti, jm, lq);
                const double v01 = table_.at(ti, jm, lq1);
                const double v10 = table_.at(ti, jm1, lq);
                const double v11 = table_.at(ti, jm1, lq1);
                return (1.0 - wm) * ((1.0 - wq) * v00 + wq * v01) +
                       wm * ((1.0 - wq) * v10 + wq * v11);
            };
            const double v = (1.0 - wt) * plane(it) + wt * plane(it1);
            return clamp_to(v, clip_);
        }
    }
    throw ConfigError("DecisionRule: unknown kind");
}

std::string DecisionRule::kind_name() const {
    switch (kind_) {
        case Kind::Zero: return "zero";
        case Kind::Constant: return "constant";
        case Kind::Myopic: return "myopic";
        case Kind::Grid: return "grid";
    }
    return "unknown";
}

const RuleTable& DecisionRule::table() const {
    if (kind_ != Kind::Grid) throw ConfigError("DecisionRule: no table on this rule kind");
    return table_;
}

double default_clip(const ModelParams& p) {
    const double m_span = p.m0.cwiseAbs().maxCoeff() + p.mu_bar.cwiseAbs().maxCoeff() +
                          6.0 * std::sqrt(p.cov_bound());
    return 10.0 * row_sum_norm(p.Sigma_R_inv()) * m_span / (1.0 - p.theta);
}

}  // namespace driftlab
