#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ntk/net.hpp"
#include "ntk/results.hpp"

namespace ntk {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

// Result of a named acceptance check; the CLI turns failures into exit 4 under --assert.
struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ExperimentResult {
    std::vector<ResultTable> tables;
    std::map<std::string, Json> reports;  // written as <key>.json
    std::vector<std::pair<std::string, NetworkParams>> snapshots;
    std::vector<Check> checks;
    std::uint64_t master_seed = 0;
};

struct RunContext {
    int threads = 1;
    double budget_seconds = 300.0;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    // Throws BudgetExceeded once the wall-clock budget is spent.
    void check_budget(const std::string& where) const;
};

struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> experiment_names();

// Applies defaults and checks every key; unknown keys, wrong types and
// out-of-range values raise ConfigError. The returned document is the fully
// resolved config that the experiment will run with.
Json resolve_config(const Json& raw);

// key.sub=value; the value is parsed as JSON when possible, else taken as a string.
void apply_override(Json& config, const std::string& assignment);

Json load_config(const std::filesystem::path& path);

// FNV-1a over the compact dump of the resolved config.
std::uint64_t config_hash(const Json& resolved);
std::string hex64(std::uint64_t v);

ExperimentResult run_experiment(const Json& resolved, RunContext& ctx);

// Per-replicate seed derived from the master seed and a replicate label.
std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t label);

// Runs body(i) for i in [0, n) on up to `threads` workers. Results must be
// written to per-index slots so the outcome does not depend on scheduling.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

// Writes tables (CSV plus provenance sidecar), reports and snapshots into out_dir.
void write_outputs(const ExperimentResult& result, const Json& resolved, const std::filesystem::path& out_dir,
                   double wall_seconds, const std::string& started_at);

// Individual drivers, exposed for tests and the acceptance binary.
ExperimentResult exp_eigendecay(const Json& cfg, RunContext& ctx);
ExperimentResult exp_sampling_noise(const Json& cfg, RunContext& ctx);
ExperimentResult exp_concentration(const Json& cfg, RunContext& ctx);
ExperimentResult exp_holder_perturbation(const Json& cfg, RunContext& ctx);
ExperimentResult exp_train(const Json& cfg, RunContext& ctx);
ExperimentResult exp_odebound(const Json& cfg, RunContext& ctx);
ExperimentResult exp_kernel_table(const Json& cfg, RunContext& ctx);

}  // namespace ntk
