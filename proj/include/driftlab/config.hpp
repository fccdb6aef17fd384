#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "driftlab/control.hpp"
#include "driftlab/dpe.hpp"
#include "driftlab/params.hpp"

namespace driftlab {

struct McConfig {
    std::size_t n_paths = 10000;
    int n_steps = 2000;
    std::uint64_t master_seed = 12345;
    int n_bundles = 100;
    int workers = 1;
};

struct RegSectionConfig {
    std::optional<double> epsilon;  ///< resolved to the parameter default when absent
    double delta = 0.5;
    std::vector<long> k_list{10, 100, 1000, 10000};
    std::optional<long> k;          ///< single index applied by `solve`
    bool eps_opt = false;
};

struct EvalConfig {
    std::vector<std::string> rules{"zero", "myopic"};
    bool identity_check = true;
};

struct SolverConfig {
    int gh_order = 11;
    int time_refine = 1;
    double cfl_fraction = 0.4;
};

struct OutputConfig {
    std::string dir = "out";
    std::vector<std::string> formats{"csv", "json"};
};

/// Whole-run configuration: strict JSON schema (unknown keys rejected),
/// every default made explicit in the resolved echo.
struct RunConfig {
    ModelParams model;
    Grid2D grid;           ///< resolved (config overrides on top of derived defaults)
    McConfig mc;
    RegSectionConfig reg;
    EvalConfig eval;
    SolverConfig solver;
    OutputConfig output;
    double resolved_epsilon = 0.0;

    static RunConfig load(const std::string& path);
    static RunConfig from_json_text(const std::string& text);

    /// Full configuration with every default spelled out.
    std::string resolved_json() const;
    /// Write the resolved echo next to the outputs.
    void write_resolved(const std::string& file) const;

    McOptions mc_options() const;
    DpeOptions dpe_options() const;
};

}  // namespace driftlab
