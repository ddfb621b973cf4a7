#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "selmut/analysis.hpp"
#include "selmut/io.hpp"
#include "selmut/presets.hpp"

namespace selmut {

/// Fully resolved experiment settings. Every field has a config key; see
/// configs/*.conf and the README for the schema.
struct ExperimentConfig {
    std::string model_name;
    PresetParams model_params;
    std::string v0_name;
    std::map<std::string, Vec> v0_params;

    double h = 0.0;       ///< discretization.h, or support width / discretization.N
    Vec h_list;           ///< discretization.h_list or widths / discretization.N_list
    std::string cutoff = "gaussian";
    std::map<std::string, double> cutoff_params;
    EpsilonRule eps_rule = EpsilonRule::power(0.5);
    RunConfig run;

    bool oracle = false;
    ReferenceOptions oracle_options;
    double oracle_refine_tol = 1e-3;
    int oracle_refinements = 0;  ///< extra dx halvings allowed while the oracle mass is unstable

    double window = 5.0;
    double pos_tol = 0.0;  ///< 0 selects 10 h
    double mass_tol = 1e-3;
    double gap_floor = 0.1;

    std::filesystem::path out_dir = "out";
    long long seed = 0;  ///< reserved; every pipeline is deterministic

    Config resolved;  ///< echo of every key with defaults filled in
};

/// Keys with a fixed meaning; SELMUT_<KEY> environment variables override them.
const std::vector<std::string>& known_config_keys();

/// Applies environment overrides, fills defaults and validates names and ranges.
/// Throws UsageError.
ExperimentConfig resolve_experiment(Config cfg);

ModelSpec build_model(const ExperimentConfig& cfg);
InitialDensity build_initial_density(const ExperimentConfig& cfg, const ModelSpec& model);

struct SimulateResult {
    Trajectory trajectory;
    double h = 0.0;
    double eps = 0.0;
    SpacingReport spacing;
};

struct ConvergeResult {
    Vec h;
    Vec eps;
    Vec l1;         ///< vs the oracle, or vs the finest run in self-convergence mode
    Vec pointwise;  ///< empty in self-convergence mode
    std::optional<OrderFit> l1_fit;
    std::optional<OrderFit> pointwise_fit;
    std::vector<MonitorSummary> monitors;
    double oracle_mass = 0.0;
};

struct AsymptoteMember {
    double h = 0.0;
    std::size_t particles = 0;
    double mass = 0.0;
    ClusterResult clusters;
    std::vector<std::optional<double>> predicted_mass;  ///< per cluster
    std::optional<DiracResiduals> residuals;
    std::optional<double> gap;
    MonitorSummary monitors;
};

struct AsymptoteResult {
    std::vector<AsymptoteMember> members;
    Vec oracle_dx;
    Vec oracle_mass;
    std::optional<ApVerdict> verdict;
};

/// Each mode writes its artifacts and a manifest into `out`.
SimulateResult run_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out);
ConvergeResult run_converge(const ExperimentConfig& cfg, const std::filesystem::path& out);
AsymptoteResult run_asymptote(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// The four advection-selection scenarios (a)-(d) in subdirectories of `out`.
/// `base` supplies N, T, dt, the cut-off, the epsilon rule and the oracle dx.
std::vector<AsymptoteResult> run_reproduce_fig2(const Config& base, const std::filesystem::path& out, int workers);

/// Config for one scenario ('a'..'d') with the reproduction defaults.
Config fig2_scenario(char scenario, const Config& base);

}  // namespace selmut
