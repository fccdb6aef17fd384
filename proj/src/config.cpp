#include "driftlab/config.hpp"

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "driftlab/errors.hpp"
#include "driftlab/linalg.hpp"
#include "driftlab/state.hpp"

namespace driftlab {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError("config: '" + where + "' must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key '" + it.key() + "' in '" + where + "'");
}

Eigen::MatrixXd mat_from(const json& rows, const std::string& name) {
    if (!rows.is_array() || rows.empty() || !rows[0].is_array())
        throw ConfigError("config: '" + name + "' must be a matrix (array of arrays)");
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != static_cast<std::size_t>(m.cols()))
            throw ConfigError("config: ragged matrix in '" + name + "'");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
    }
    return m;
}

Eigen::VectorXd vec_from(const json& arr, const std::string& name) {
    if (!arr.is_array() || arr.empty()) throw ConfigError("config: '" + name + "' must be an array");
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

json mat_to(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(r);
    }
    return rows;
}

json vec_to(const Eigen::VectorXd& v) {
    json r = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) r.push_back(v[i]);
    return r;
}

void wellposedness_warning(const ModelParams& p) {
    if (!(p.theta > 0.0 && p.theta < 1.0)) return;
    // Rough divergence heuristic: a Gaussian mean of variance v feeds the
    // exponential criterion with rate theta/(2(1-theta)) m^2 Sigma_R^{-1};
    // 2 * rate * v * T near or above 1 signals a fragile (nirvana-adjacent)
    // parameter set.
    double drift_var;
    if (eigenvalues_have_positive_real_part(p.kappa)) {
        drift_var = row_sum_norm(solve_lyapunov(p.kappa, p.Sigma_mu())) +
                    row_sum_norm(p.q0);
    } else {
        drift_var = row_sum_norm(p.q0) + row_sum_norm(p.Sigma_mu()) * p.T;
    }
    const double rate =
        p.theta / (2.0 * (1.0 - p.theta)) * row_sum_norm(p.Sigma_R_inv());
    if (2.0 * rate * drift_var * p.T >= 1.0)
        std::cerr << "warning: theta in (0,1) with a hot parameter set "
                     "(heuristic exponent scale "
                  << 2.0 * rate * drift_var * p.T
                  << " >= 1); the optimization may be ill-posed over this horizon\n";
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(root, "<root>",
               {"model", "grid", "mc", "regularization", "evaluate", "solver", "output"});
    if (!root.contains("model")) throw ConfigError("config: 'model' section is required");

    RunConfig cfg;
    const json& jm = root.at("model");
    check_keys(jm, "model",
               {"d", "d1", "d2", "kappa", "mu_bar", "sigma_mu", "sigma_R", "Gamma", "lambda",
                "theta", "T", "m0", "q0", "x0"});
    for (const char* key : {"d", "d1", "d2", "kappa", "mu_bar", "sigma_mu", "sigma_R", "Gamma",
                            "lambda", "theta", "T", "m0", "q0", "x0"})
        if (!jm.contains(key)) throw ConfigError(std::string("config: model.") + key + " is required");
    cfg.model.d = jm.at("d").get<int>();
    cfg.model.d1 = jm.at("d1").get<int>();
    cfg.model.d2 = jm.at("d2").get<int>();
    cfg.model.kappa = mat_from(jm.at("kappa"), "model.kappa");
    cfg.model.mu_bar = vec_from(jm.at("mu_bar"), "model.mu_bar");
    cfg.model.sigma_mu = mat_from(jm.at("sigma_mu"), "model.sigma_mu");
    cfg.model.sigma_R = mat_from(jm.at("sigma_R"), "model.sigma_R");
    cfg.model.Gamma = mat_from(jm.at("Gamma"), "model.Gamma");
    cfg.model.lambda = jm.at("lambda").get<double>();
    cfg.model.theta = jm.at("theta").get<double>();
    cfg.model.T = jm.at("T").get<double>();
    cfg.model.m0 = vec_from(jm.at("m0"), "model.m0");
    cfg.model.q0 = mat_from(jm.at("q0"), "model.q0");
    cfg.model.x0 = jm.at("x0").get<double>();
    cfg.model.validate(false);
    wellposedness_warning(cfg.model);

    cfg.grid = Grid2D::defaults(cfg.model);
    if (root.contains("grid")) {
        const json& jg = root.at("grid");
        check_keys(jg, "grid", {"m_lo", "m_hi", "n_m", "q_hi", "n_q", "n_t"});
        if (jg.contains("q_hi")) {
            cfg.grid.q_hi = jg.at("q_hi").get<double>();
            // q_hi moved: recenter the default mean range unless overridden
            const double span = 6.0 * std::sqrt(cfg.grid.q_hi);
            cfg.grid.m_lo = std::min(cfg.model.m0[0], cfg.model.mu_bar[0]) - span;
            cfg.grid.m_hi = std::max(cfg.model.m0[0], cfg.model.mu_bar[0]) + span;
        }
        if (jg.contains("m_lo")) cfg.grid.m_lo = jg.at("m_lo").get<double>();
        if (jg.contains("m_hi")) cfg.grid.m_hi = jg.at("m_hi").get<double>();
        if (jg.contains("n_m")) cfg.grid.n_m = jg.at("n_m").get<int>();
        if (jg.contains("n_q")) cfg.grid.n_q = jg.at("n_q").get<int>();
        if (jg.contains("n_t")) cfg.grid.n_t = jg.at("n_t").get<int>();
    }
    if (cfg.model.d == 1) cfg.grid.validate(cfg.model);

    if (root.contains("mc")) {
        const json& j = root.at("mc");
        check_keys(j, "mc", {"n_paths", "n_steps", "master_seed", "n_bundles", "workers"});
        if (j.contains("n_paths")) cfg.mc.n_paths = j.at("n_paths").get<std::size_t>();
        if (j.contains("n_steps")) cfg.mc.n_steps = j.at("n_steps").get<int>();
        if (j.contains("master_seed")) cfg.mc.master_seed = j.at("master_seed").get<std::uint64_t>();
        if (j.contains("n_bundles")) cfg.mc.n_bundles = j.at("n_bundles").get<int>();
        if (j.contains("workers")) cfg.mc.workers = j.at("workers").get<int>();
        if (cfg.mc.n_paths == 0 || cfg.mc.n_steps < 1 || cfg.mc.n_bundles < 1 || cfg.mc.workers < 1)
            throw ConfigError("config: mc counts must be positive");
    }
    if (root.contains("regularization")) {
        const json& j = root.at("regularization");
        check_keys(j, "regularization", {"epsilon", "delta", "k_list", "k", "eps_opt"});
        if (j.contains("epsilon") && !j.at("epsilon").is_null())
            cfg.reg.epsilon = j.at("epsilon").get<double>();
        if (j.contains("delta")) cfg.reg.delta = j.at("delta").get<double>();
        if (j.contains("k_list")) {
            cfg.reg.k_list.clear();
            for (const auto& v : j.at("k_list")) cfg.reg.k_list.push_back(v.get<long>());
            if (cfg.reg.k_list.empty()) throw ConfigError("config: k_list must not be empty");
        }
        if (j.contains("k") && !j.at("k").is_null()) cfg.reg.k = j.at("k").get<long>();
        if (j.contains("eps_opt")) cfg.reg.eps_opt = j.at("eps_opt").get<bool>();
        if (cfg.reg.delta <= 0.0) throw ConfigError("config: regularization delta must be positive");
    }
    if (root.contains("evaluate")) {
        const json& j = root.at("evaluate");
        check_keys(j, "evaluate", {"rules", "identity_check"});
        if (j.contains("rules")) {
            cfg.eval.rules.clear();
            for (const auto& v : j.at("rules")) cfg.eval.rules.push_back(v.get<std::string>());
        }
        if (j.contains("identity_check")) cfg.eval.identity_check = j.at("identity_check").get<bool>();
    }
    if (root.contains("solver")) {
        const json& j = root.at("solver");
        check_keys(j, "solver", {"gh_order", "time_refine", "cfl_fraction"});
        if (j.contains("gh_order")) cfg.solver.gh_order = j.at("gh_order").get<int>();
        if (j.contains("time_refine")) cfg.solver.time_refine = j.at("time_refine").get<int>();
        if (j.contains("cfl_fraction")) cfg.solver.cfl_fraction = j.at("cfl_fraction").get<double>();
        if (cfg.solver.gh_order < 5 || cfg.solver.time_refine < 1 || cfg.solver.cfl_fraction <= 0.0)
            throw ConfigError("config: bad solver settings");
    }
    if (root.contains("output")) {
        const json& j = root.at("output");
        check_keys(j, "output", {"dir", "formats"});
        if (j.contains("dir")) cfg.output.dir = j.at("dir").get<std::string>();
        if (j.contains("formats")) {
            cfg.output.formats.clear();
            for (const auto& v : j.at("formats")) {
                const std::string f = v.get<std::string>();
                if (f != "csv" && f != "json") throw ConfigError("config: unknown format " + f);
                cfg.output.formats.push_back(f);
            }
        }
    }

    cfg.resolved_epsilon = cfg.reg.epsilon.value_or(cfg.model.default_epsilon());
    RegularizationConfig probe{cfg.resolved_epsilon, std::nullopt};
    probe.validate(cfg.model);
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string RunConfig::resolved_json() const {
    json root;
    root["model"] = {{"d", model.d},
                     {"d1", model.d1},
                     {"d2", model.d2},
                     {"kappa", mat_to(model.kappa)},
                     {"mu_bar", vec_to(model.mu_bar)},
                     {"sigma_mu", mat_to(model.sigma_mu)},
                     {"sigma_R", mat_to(model.sigma_R)},
                     {"Gamma", mat_to(model.Gamma)},
                     {"lambda", model.lambda},
                     {"theta", model.theta},
                     {"T", model.T},
                     {"m0", vec_to(model.m0)},
                     {"q0", mat_to(model.q0)},
                     {"x0", model.x0}};
    root["grid"] = {{"m_lo", grid.m_lo}, {"m_hi", grid.m_hi}, {"n_m", grid.n_m},
                    {"q_hi", grid.q_hi}, {"n_q", grid.n_q},   {"n_t", grid.n_t}};
    root["mc"] = {{"n_paths", mc.n_paths},
                  {"n_steps", mc.n_steps},
                  {"master_seed", mc.master_seed},
                  {"n_bundles", mc.n_bundles},
                  {"workers", mc.workers}};
    json reg_j = {{"epsilon", resolved_epsilon},
                  {"delta", reg.delta},
                  {"k_list", reg.k_list},
                  {"eps_opt", reg.eps_opt}};
    reg_j["k"] = reg.k ? json(*reg.k) : json(nullptr);
    root["regularization"] = reg_j;
    root["evaluate"] = {{"rules", eval.rules}, {"identity_check", eval.identity_check}};
    root["solver"] = {{"gh_order", solver.gh_order},
                      {"time_refine", solver.time_refine},
                      {"cfl_fraction", solver.cfl_fraction}};
    root["output"] = {{"dir", output.dir}, {"formats", output.formats}};
    return root.dump(2) + "\n";
}

void RunConfig::write_resolved(const std::string& file) const {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot write resolved config: " + file);
    out << resolved_json();
}

McOptions RunConfig::mc_options() const {
    McOptions opt;
    opt.n_steps = mc.n_steps;
    opt.workers = mc.workers;
    return opt;
}

DpeOptions RunConfig::dpe_options() const {
    DpeOptions opt;
    opt.gh_order = solver.gh_order;
    opt.time_refine = solver.time_refine;
    opt.cfl_fraction = solver.cfl_fraction;
    opt.reg_k = reg.k;
    return opt;
}

}  // namespace driftlab
