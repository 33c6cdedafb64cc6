#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ntk/activations.hpp"
#include "ntk/errors.hpp"
#include "ntk/experiments.hpp"
#include "ntk/flow.hpp"
#include "ntk/kernel.hpp"
#include "ntk/numerics/rng.hpp"

namespace ntk {

namespace {

// Copies known keys from `in` to `out`, filling defaults, and remembers which
// keys it saw so that finish() can reject the rest.
class Reader {
public:
    Reader(const Json& in, std::string where) : in_(in), where_(std::move(where)) {
        if (!in_.is_object()) fail("", "must be a JSON object");
    }

    double real(const std::string& k, double def, double lo, double hi) {
        const Json* v = take(k);
        double x = def;
        if (v) {
            if (!v->is_number()) fail(k, "must be a number");
            x = v->get<double>();
        }
        if (!(x >= lo && x <= hi)) fail(k, "must lie in [" + format_real(lo) + ", " + format_real(hi) + "]");
        out[k] = x;
        return x;
    }

    long integer(const std::string& k, long def, long lo, long hi) {
        const Json* v = take(k);
        long x = def;
        if (v) {
            if (!v->is_number_integer()) fail(k, "must be an integer");
            x = v->get<long>();
        }
        if (x < lo || x > hi) fail(k, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        out[k] = x;
        return x;
    }

    std::string text(const std::string& k, const std::string& def, const std::vector<std::string>& allowed = {}) {
        const Json* v = take(k);
        std::string x = def;
        if (v) {
            if (!v->is_string()) fail(k, "must be a string");
            x = v->get<std::string>();
        }
        check_allowed(k, x, allowed);
        out[k] = x;
        return x;
    }

    bool flag(const std::string& k, bool def) {
        const Json* v = take(k);
        bool x = def;
        if (v) {
            if (!v->is_boolean()) fail(k, "must be true or false");
            x = v->get<bool>();
        }
        out[k] = x;
        return x;
    }

    std::vector<double> reals(const std::string& k, std::vector<double> def, double lo, double hi, std::size_t min_len) {
        const Json* v = take(k);
        std::vector<double> x = std::move(def);
        if (v) {
            if (!v->is_array()) fail(k, "must be a list of numbers");
            x.clear();
            for (const auto& e : *v) {
                if (!e.is_number()) fail(k, "must be a list of numbers");
                x.push_back(e.get<double>());
            }
        }
        if (x.size() < min_len) fail(k, "needs at least " + std::to_string(min_len) + " entries");
        for (double e : x)
            if (!(e >= lo && e <= hi)) fail(k, "entries must lie in [" + format_real(lo) + ", " + format_real(hi) + "]");
        out[k] = x;
        return x;
    }

    std::vector<long> integers(const std::string& k, std::vector<long> def, long lo, long hi, std::size_t min_len) {
        const Json* v = take(k);
        std::vector<long> x = std::move(def);
        if (v) {
            if (!v->is_array()) fail(k, "must be a list of integers");
            x.clear();
            for (const auto& e : *v) {
                if (!e.is_number_integer()) fail(k, "must be a list of integers");
                x.push_back(e.get<long>());
            }
        }
        if (x.size() < min_len) fail(k, "needs at least " + std::to_string(min_len) + " entries");
        for (long e : x)
            if (e < lo || e > hi)
                fail(k, "entries must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        out[k] = x;
        return x;
    }

    std::vector<std::string> texts(const std::string& k, std::vector<std::string> def,
                                   const std::vector<std::string>& allowed, std::size_t min_len) {
        const Json* v = take(k);
        std::vector<std::string> x = std::move(def);
        if (v) {
            if (!v->is_array()) fail(k, "must be a list of strings");
            x.clear();
            for (const auto& e : *v) {
                if (!e.is_string()) fail(k, "must be a list of strings");
                x.push_back(e.get<std::string>());
            }
        }
        if (x.size() < min_len) fail(k, "needs at least " + std::to_string(min_len) + " entries");
        for (const auto& e : x) check_allowed(k, e, allowed);
        out[k] = x;
        return x;
    }

    template <class Fill>
    void nested(const std::string& k, Fill fill) {
        const Json* v = take(k);
        static const Json empty = Json::object();
        Reader r(v ? *v : empty, where_ + k + ".");
        fill(r);
        r.finish();
        out[k] = r.out;
    }

    bool has(const std::string& k) const { return in_.contains(k); }

    void finish() const {
        for (auto it = in_.begin(); it != in_.end(); ++it)
            if (!seen_.count(it.key())) fail(it.key(), "unknown key");
    }

    [[noreturn]] void fail(const std::string& k, const std::string& msg) const {
        throw ConfigError("config: " + where_ + k + (k.empty() ? "" : ": ") + msg);
    }

    Json out = Json::object();

private:
    const Json* take(const std::string& k) {
        seen_.insert(k);
        auto it = in_.find(k);
        if (it == in_.end() || it->is_null()) return nullptr;
        return &*it;
    }

    void check_allowed(const std::string& k, const std::string& x, const std::vector<std::string>& allowed) const {
        if (allowed.empty()) return;
        for (const auto& a : allowed)
            if (a == x) return;
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        fail(k, "'" + x + "' is not one of {" + list + "}");
    }

    const Json& in_;
    std::string where_;
    std::set<std::string> seen_;
};

std::vector<std::string> activation_names() {
    std::vector<std::string> v;
    for (ActKind k : all_activation_kinds()) v.push_back(to_string(k));
    return v;
}

const std::vector<std::string> kPairMethods = {"automatic", "mehler", "quadrature", "closed_form_relu"};

std::vector<double> powers_of_two(int lo, int hi) {
    std::vector<double> v;
    for (int k = lo; k <= hi; ++k) v.push_back(std::ldexp(1.0, k));
    return v;
}

void resolve_eigendecay(Reader& r) {
    r.text("mode", "empirical", {"empirical", "analytic"});
    r.texts("activations", {"relu", "elu", "gelu"}, activation_names(), 1);
    const long d = r.integer("d", 2, 2, 64);
    r.integer("L", 2, 2, 8);
    r.integer("n", 100, 4, 4000);
    r.integer("m", 1000, 1, 20000);
    r.integers("seeds", {1}, 0, std::numeric_limits<int>::max(), 1);
    r.text("grid", "monte_carlo", {"monte_carlo", "uniform_circle"});
    const long lo = r.integer("fit_min", 2, 0, 10000);
    const long hi = r.integer("fit_max", 20, 1, 10000);
    if (hi <= lo) r.fail("fit_max", "must exceed fit_min");
    const long ell_max = r.integer("ell_max", 40, 1, 400);
    const long q = r.integer("quad_order", 400, 8, 20000);
    if (q < 4 * ell_max) r.fail("quad_order", "must be at least 4 * ell_max");
    r.text("pair_method", "automatic", kPairMethods);
    (void)d;
}

void resolve_noise(Reader& r) {
    r.texts("activations", {"relu", "elu", "gelu"}, activation_names(), 1);
    r.integer("d", 2, 2, 64);
    r.integer("L", 2, 2, 8);
    r.integer("n", 100, 4, 4000);
    r.integer("m", 1000, 1, 20000);
    const auto s = r.integers("seeds", {1, 2}, 0, std::numeric_limits<int>::max(), 2);
    if (s.size() != 2) r.fail("seeds", "must hold exactly two seeds");
    r.text("grid", "monte_carlo", {"monte_carlo", "uniform_circle"});
    r.reals("accept_band", {0.1, 0.6}, 0.0, 1e300, 2);
}

void resolve_concentration(Reader& r) {
    r.texts("activations", {"relu", "gelu"}, activation_names(), 1);
    r.integer("d", 2, 2, 64);
    r.integer("L", 2, 2, 8);
    r.integer("n0", 8, 2, 100000);
    const auto w = r.integers("widths", {64, 128, 256, 512, 1024, 2048, 4096}, 1, 100000, 4);
    for (std::size_t i = 1; i < w.size(); ++i)
        if (w[i] <= w[i - 1]) r.fail("widths", "must be increasing");
    r.integer("seeds", 10, 10, 100000);
    r.integer("grid_n", 20, 4, 1000);
    r.text("pair_method", "automatic", kPairMethods);
    r.reals("slope_band", {-0.65, -0.35}, -10, 10, 2);
}

void resolve_holder(Reader& r) {
    r.text("activation", "gelu", activation_names());
    r.integer("d", 2, 2, 64);
    r.integer("L", 3, 2, 8);
    r.integer("m", 512, 1, 20000);
    r.real("alpha", 0.25, 1e-6, 1.0);
    const auto hs = r.reals("hs", powers_of_two(-7, -1), 0.0, 1.0, 2);
    for (std::size_t i = 1; i < hs.size(); ++i)
        if (hs[i] <= hs[i - 1]) r.fail("hs", "must be increasing");
    r.integer("grid_n", 20, 4, 200);
    r.real("slope_slack", 0.25, 0.0, 10.0);
}

void resolve_train(Reader& r) {
    long d = 2;
    r.nested("network", [&](Reader& n) {
        d = n.integer("d", 2, 2, 3);
        n.integer("L", 3, 2, 8);
        n.integer("width", 256, 1, 20000);
        n.integer("n0", -1, -1, 100000);
    });
    r.text("activation", "gelu", activation_names());
    r.nested("target", [&](Reader& t) {
        t.text("kind", "random_sobolev", {"random_sobolev", "named"});
        t.real("alpha_star", 0.3, 0.0, 100.0);
        t.integer("seed", 1, 0, std::numeric_limits<int>::max());
        t.text("name", "", {"", "zero", "constant", "x1", "abs_x1", "initial_network"});
    });
    r.integer("grid_n", 64, 4, 4096);
    r.integer("harmonic_cutoff", -1, -1, 4096);
    const double alpha = r.real("alpha", 0.25, 1e-9, 0.5 - 1e-9);
    r.real("t_end", 20.0, 1e-9, 1e9);
    r.real("rel_tol", 1e-7, 1e-14, 1e-2);
    r.integer("checkpoints", 24, 10, 100000);
    r.real("first_checkpoint_fraction", 1e-3, 1e-12, 1.0);
    r.integers("widths", {}, 1, 20000, 0);
    r.flag("save_snapshots", true);
    r.nested("envelope", [&](Reader& e) {
        const double beta = e.real("beta", 0.5 * d, 1e-9, 100.0);
        if (alpha > beta / 2) e.fail("beta", "need alpha <= beta / 2");
        const double gamma = e.real("gamma", 0.5, 1e-9, 1.0);
        if (!(gamma < 1.0 - alpha)) e.fail("gamma", "need gamma < 1 - alpha");
        e.real("c", 1.0, 0.0, 1e9);
        e.real("min_coverage", 0.95, 0.0, 1.0);
    });
    r.real("smoothness_factor", 5.0, 1.0, 1e9);
    r.reals("weight_distance_slope_band", {-0.7, -0.3}, -10, 10, 2);
}

void resolve_odebound(Reader& r) {
    OdeBoundParams p;
    p.a = r.real("a", 1.0, 0.0, 1e12);
    p.b = r.real("b", 1.0, 0.0, 1e12);
    p.c = r.real("c", 1.0, 0.0, 1e12);
    p.d = r.real("d", 1.0, 0.0, 1e12);
    p.rho = r.real("rho", 1.0, -1e12, 1e12);
    p.x0 = r.real("x0", 1.0, 0.0, 1e300);
    p.y0 = r.real("y0", 1.0, 0.0, 1e300);
    p.t_end = r.real("t_end", 5.0, 1e-12, 1e9);
    p.rel_tol = r.real("rel_tol", 1e-9, 1e-14, 1e-2);
    long draws = 0;
    r.nested("sweep", [&](Reader& s) {
        draws = s.integer("draws", 0, 0, 1000000);
        s.reals("rho_range", {0.5, 3.0}, 0.5, 100.0, 2);
        s.reals("coef_range", {0.1, 10.0}, 1e-12, 1e12, 2);
    });
    if (draws == 0) {
        try {
            validate_ode_bound_params(p);
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
    }
}

void resolve_kernel_table(Reader& r) {
    r.texts("activations", {"relu", "elu", "gelu"}, activation_names(), 1);
    r.integer("d", 2, 2, 64);
    r.integer("L", 2, 2, 8);
    r.integer("t_points", 201, 2, 100000);
    const long ell_max = r.integer("ell_max", 40, 1, 400);
    const long q = r.integer("quad_order", 400, 8, 20000);
    if (q < 4 * ell_max) r.fail("quad_order", "must be at least 4 * ell_max");
    r.text("pair_method", "automatic", kPairMethods);
}

}  // namespace

std::vector<std::string> experiment_names() {
    return {"eigendecay", "noise", "concentration", "holder", "train", "odebound", "kernel-table"};
}

Json resolve_config(const Json& raw) {
    Reader r(raw, "");
    const long version = r.integer("schema_version", -1, -1, 1000);
    if (!raw.contains("schema_version")) r.fail("schema_version", "missing");
    if (version != kSchemaVersion) r.fail("schema_version", "unsupported version " + std::to_string(version));
    if (!raw.contains("experiment")) r.fail("experiment", "missing");
    const std::string name = r.text("experiment", "", experiment_names());
    r.integer("seed", 1, 0, std::numeric_limits<std::int64_t>::max());
    r.real("budget_seconds", 300.0, 1e-3, 1e9);
    r.text("description", "");
    if (name == "eigendecay") resolve_eigendecay(r);
    else if (name == "noise") resolve_noise(r);
    else if (name == "concentration") resolve_concentration(r);
    else if (name == "holder") resolve_holder(r);
    else if (name == "train") resolve_train(r);
    else if (name == "odebound") resolve_odebound(r);
    else resolve_kernel_table(r);
    r.finish();
    return r.out;
}

void apply_override(Json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    Json value;
    try {
        value = Json::parse(text);
    } catch (const Json::parse_error&) {
        value = text;
    }
    Json* node = &config;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override '" + assignment + "' has an empty key segment");
        if (!node->is_object()) throw ConfigError("override '" + assignment + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = Json::object();
        start = dot + 1;
    }
}

Json load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
}

std::uint64_t config_hash(const Json& resolved) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : resolved.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t label) {
    return splitmix64(splitmix64(master) ^ label);
}

void write_outputs(const ExperimentResult& result, const Json& resolved, const std::filesystem::path& out_dir,
                   double wall_seconds, const std::string& started_at) {
    std::filesystem::create_directories(out_dir);
    auto write_text = [&](const std::string& name, const std::string& text) {
        std::ofstream f(out_dir / name, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + (out_dir / name).string());
        f << text;
    };
    const std::string hash = hex64(config_hash(resolved));
    write_text("config.resolved.json", resolved.dump(2) + "\n");
    for (const auto& t : result.tables) {
        t.write_csv(out_dir / (t.name() + ".csv"));
        Json prov;
        prov["experiment"] = resolved.at("experiment");
        prov["table"] = t.name();
        prov["rows"] = t.size();
        Json cols = Json::array();
        for (const auto& c : t.columns()) cols.push_back(c.name);
        prov["columns"] = cols;
        prov["config_hash"] = hash;
        prov["master_seed"] = result.master_seed;
        prov["version"] = kVersion;
        prov["schema_version"] = kSchemaVersion;
        prov["started_at"] = started_at;
        prov["wall_seconds"] = wall_seconds;
        write_text(t.name() + ".provenance.json", prov.dump(2) + "\n");
    }
    for (const auto& [key, doc] : result.reports) write_text(key + ".json", doc.dump(2) + "\n");
    for (const auto& [key, params] : result.snapshots) {
        SnapshotMeta meta;
        meta.seed = result.master_seed;
        meta.activation = resolved.value("activation", std::string());
        save_snapshot(out_dir / (key + ".ntksnap"), params, meta);
    }
    Json checks = Json::array();
    for (const auto& c : result.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    write_text("checks.json", checks.dump(2) + "\n");
}

}  // namespace ntk
