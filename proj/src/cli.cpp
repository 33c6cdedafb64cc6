#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "ntk/cli.hpp"
#include "ntk/errors.hpp"
#include "ntk/experiments.hpp"

namespace ntk {

namespace {

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

struct Options {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
    long long seed = -1;
    int threads = 1;
    bool assert_checks = false;
};

Json build_config(const std::string& experiment, const Options& o) {
    Json raw = o.config.empty() ? Json{{"schema_version", kSchemaVersion}, {"experiment", experiment}}
                                : load_config(o.config);
    for (const auto& ov : o.overrides) apply_override(raw, ov);
    if (o.seed >= 0) raw["seed"] = o.seed;
    if (!experiment.empty() && raw.value("experiment", std::string()) != experiment)
        throw ConfigError("config describes experiment '" + raw.value("experiment", std::string("?")) +
                          "' but the subcommand is '" + experiment + "'");
    return resolve_config(raw);
}

int execute(const std::string& experiment, const Options& o, std::ostream& out) {
    const Json resolved = build_config(experiment, o);
    if (experiment.empty()) {
        out << "config ok: experiment " << resolved.at("experiment").get<std::string>() << ", hash "
            << hex64(config_hash(resolved)) << "\n";
        return kExitOk;
    }
    RunContext ctx;
    ctx.threads = std::max(1, o.threads);
    const std::string started_at = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentResult result = run_experiment(resolved, ctx);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string dir = o.out.empty() ? "results/" + experiment : o.out;
    write_outputs(result, resolved, dir, wall, started_at);

    bool all = true;
    for (const auto& c : result.checks) {
        out << (c.passed ? "ok   " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << "\n";
        all = all && c.passed;
    }
    out << "wrote " << result.tables.size() << " tables to " << dir << " in " << std::fixed << std::setprecision(2)
        << wall << " s\n";
    return (o.assert_checks && !all) ? kExitAssert : kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"ntklab: neural tangent kernel experiments"};
    app.require_subcommand(1);
    Options o;
    std::string chosen;

    auto add_common = [&](CLI::App* sub, bool runs) {
        sub->add_option("--config,-c", o.config, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("overrides", o.overrides, "key.sub=value overrides");
        sub->add_option("--seed", o.seed, "master seed override")->check(CLI::NonNegativeNumber);
        if (runs) {
            sub->add_option("--out,-o", o.out, "output directory");
            sub->add_option("--threads,-j", o.threads, "worker threads")->check(CLI::PositiveNumber);
            sub->add_flag("--assert", o.assert_checks, "exit 4 when an acceptance check fails");
        }
    };
    for (const auto& name : experiment_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        add_common(sub, true);
        sub->callback([&, name] { chosen = name; });
    }
    auto* val = app.add_subcommand("validate-config", "resolve and check a config without running it");
    add_common(val, false);
    val->callback([&] { chosen = ""; });
    val->get_option("--config")->required();

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        return execute(chosen, o, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InvalidArgument& e) {
        err << "invalid argument: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const MethodDomainError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const BudgetExceeded& e) {
        err << "budget exceeded: " << e.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace ntk
