#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ntk/cli.hpp"
#include "ntk/errors.hpp"
#include "ntk/experiments.hpp"

using namespace ntk;
namespace fs = std::filesystem;

namespace {

Json base(const std::string& name) { return Json{{"schema_version", 1}, {"experiment", name}}; }

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ntklab_test_" + name);
    fs::remove_all(p);
    return p;
}

int cli(const std::vector<std::string>& args, std::string* out = nullptr, std::string* err = nullptr) {
    std::ostringstream o, e;
    const int code = run_cli(args, o, e);
    if (out) *out = o.str();
    if (err) *err = e.str();
    return code;
}

const fs::path kConfigs = fs::path(NTK_SOURCE_DIR) / "configs";

}  // namespace

TEST_CASE("config resolution fills defaults and rejects unknown keys") {
    const Json r = resolve_config(base("eigendecay"));
    CHECK(r.at("n") == 100);
    CHECK(r.at("m") == 1000);
    CHECK(r.at("seed") == 1);
    CHECK(r.at("activations") == Json({"relu", "elu", "gelu"}));

    Json bad = base("eigendecay");
    bad["nn"] = 3;
    CHECK_THROWS_AS(resolve_config(bad), ConfigError);
    bad = base("train");
    bad["network"] = {{"width", 64}, {"depth", 3}};
    CHECK_THROWS_AS(resolve_config(bad), ConfigError);
    bad = base("eigendecay");
    bad["activations"] = {"relu", "swish"};
    CHECK_THROWS_AS(resolve_config(bad), ConfigError);
    bad = base("noise");
    bad["m"] = "wide";
    CHECK_THROWS_AS(resolve_config(bad), ConfigError);
    CHECK_THROWS_AS(resolve_config(Json{{"experiment", "noise"}}), ConfigError);
    CHECK_THROWS_AS(resolve_config(Json{{"schema_version", 2}, {"experiment", "noise"}}), ConfigError);
    CHECK_THROWS_AS(resolve_config(base("fit")), ConfigError);
}

TEST_CASE("resolution is idempotent and the hash tracks content") {
    const Json r = resolve_config(base("train"));
    CHECK(resolve_config(r) == r);
    CHECK(config_hash(r) == config_hash(resolve_config(r)));
    Json other = base("train");
    other["t_end"] = 10.0;
    CHECK(config_hash(resolve_config(other)) != config_hash(r));
    CHECK(hex64(0x1234) == "0000000000001234");
}

TEST_CASE("dotted overrides") {
    Json c = base("train");
    apply_override(c, "network.width=64");
    apply_override(c, "widths=[32,64]");
    apply_override(c, "activation=tanh");
    apply_override(c, "envelope.gamma=0.4");
    const Json r = resolve_config(c);
    CHECK(r.at("network").at("width") == 64);
    CHECK(r.at("widths") == Json({32, 64}));
    CHECK(r.at("activation") == "tanh");
    CHECK(r.at("envelope").at("gamma") == 0.4);
    CHECK_THROWS_AS(apply_override(c, "novalue"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "activation.x=1"), ConfigError);
}

TEST_CASE("every shipped config validates") {
    int count = 0;
    for (const auto& e : fs::directory_iterator(kConfigs)) {
        if (e.path().extension() != ".json") continue;
        ++count;
        CAPTURE(e.path().string());
        CHECK_NOTHROW(resolve_config(load_config(e.path())));
        CHECK(cli({"validate-config", "--config", e.path().string()}) == kExitOk);
    }
    CHECK(count >= 8);
}

TEST_CASE("parallel_for results do not depend on the thread count") {
    Json c = base("concentration");
    c["widths"] = {16, 32, 64, 128};
    c["grid_n"] = 8;
    const Json r = resolve_config(c);
    RunContext one, three;
    three.threads = 3;
    const auto a = exp_concentration(r, one), b = exp_concentration(r, three);
    REQUIRE(a.tables.size() == b.tables.size());
    for (std::size_t i = 0; i < a.tables.size(); ++i) CHECK(a.tables[i].to_csv() == b.tables[i].to_csv());

    std::vector<int> hit(50, 0);
    parallel_for(50, 4, [&](int i) { hit[i] += 1; });
    for (int h : hit) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 3, [](int i) { if (i == 7) throw NumericalError("x"); }), NumericalError);
}

TEST_CASE("sampling noise vanishes for identical seeds") {
    Json c = base("noise");
    c["seeds"] = {5, 5};
    c["m"] = 64;
    c["n"] = 20;
    RunContext ctx;
    const auto res = exp_sampling_noise(resolve_config(c), ctx);
    const auto& t = res.tables.front();
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(t.real(i, "spectral") == 0.0);
        CHECK(t.real(i, "frobenius") == 0.0);
    }
}

TEST_CASE("analytic identity kernel has a single degree") {
    Json c = base("eigendecay");
    c["mode"] = "analytic";
    c["activations"] = {"identity"};
    c["ell_max"] = 10;
    c["quad_order"] = 80;
    RunContext ctx;
    const auto res = exp_eigendecay(resolve_config(c), ctx);
    REQUIRE(res.checks.size() == 1);
    CHECK(res.checks[0].passed);
    const auto& t = res.tables.front();
    for (std::size_t i = 0; i < t.size(); ++i) {
        const int ell = static_cast<int>(std::get<std::int64_t>(t.rows()[i][2]));
        if (ell == 1) CHECK(t.real(i, "eigenvalue") == doctest::Approx(0.5));
        else CHECK(std::abs(t.real(i, "eigenvalue")) < 1e-12);
    }
}

TEST_CASE("holder experiment: zero perturbation and slope") {
    Json c = base("holder");
    c["m"] = 64;
    c["grid_n"] = 10;
    RunContext ctx;
    const auto res = exp_holder_perturbation(resolve_config(c), ctx);
    const auto& t = res.tables.front();
    CHECK(t.real(0, "h") == 0.0);
    CHECK(t.real(0, "mixed_holder_diff") == 0.0);
    for (std::size_t i = 1; i < t.size(); ++i)
        CHECK(t.real(i, "weight_distance") == doctest::Approx(t.real(i, "h")).epsilon(1e-6));
    for (const auto& ch : res.checks) CHECK_MESSAGE(ch.passed, ch.name << ": " << ch.detail);
}

TEST_CASE("budget guard") {
    Json c = base("concentration");
    c["budget_seconds"] = 1e-3;
    c["widths"] = {512, 1024, 2048, 4096};
    RunContext ctx;
    ctx.started -= std::chrono::seconds(1);
    const Json r = resolve_config(c);
    ctx.budget_seconds = r.at("budget_seconds");
    CHECK_THROWS_AS(exp_concentration(r, ctx), BudgetExceeded);
}

TEST_CASE("cli: precondition violation exits 2 and names the condition") {
    std::string out, err;
    CHECK(cli({"odebound", "x0=0.5", "d=2", "--out", scratch("pre").string()}, &out, &err) == kExitConfig);
    CHECK(err.find("precondition") != std::string::npos);
    CHECK(err.find("x0 >= (d/c)^(2/(2 rho - 1)) * y0") != std::string::npos);
    CHECK(!fs::exists(scratch("pre")));
}

TEST_CASE("cli: exit codes for bad input") {
    CHECK(cli({"nosuch"}) == kExitConfig);
    CHECK(cli({"train", "bogus=1"}) == kExitConfig);
    CHECK(cli({"validate-config"}) == kExitConfig);
    CHECK(cli({"train", "--config", (kConfigs / "noise.json").string()}) == kExitConfig);
    const fs::path bad = scratch("bad.json");
    std::ofstream(bad) << "{ not json";
    CHECK(cli({"validate-config", "--config", bad.string()}) == kExitConfig);
}

TEST_CASE("cli: assertion failures exit 4") {
    const fs::path out = scratch("assert");
    // identical seeds give zero noise, below the acceptance band
    CHECK(cli({"noise", "seeds=[3,3]", "m=32", "n=16", "--out", out.string(), "--assert"}) == kExitAssert);
    CHECK(cli({"noise", "seeds=[3,3]", "m=32", "n=16", "--out", out.string()}) == kExitOk);
}

TEST_CASE("cli: eigendecay --assert on the shipped defaults") {
    const fs::path out = scratch("eigendecay");
    std::string text;
    CHECK(cli({"eigendecay", "--config", (kConfigs / "eigendecay.json").string(), "--out", out.string(), "--assert"},
              &text) == kExitOk);
    CHECK(fs::exists(out / "eigendecay.csv"));
    CHECK(fs::exists(out / "eigendecay.provenance.json"));
    const std::string slopes = slurp(out / "eigendecay_slopes.csv");
    CHECK(slopes.rfind("activation,slope,intercept,r2,slope_stderr,beta_estimate\n", 0) == 0);
    const Json prov = Json::parse(slurp(out / "eigendecay_slopes.provenance.json"));
    for (const char* k : {"config_hash", "master_seed", "version", "started_at", "wall_seconds"}) CHECK(prov.contains(k));
}

TEST_CASE("cli: reruns overwrite outputs with identical files") {
    const fs::path a = scratch("idem_a"), b = scratch("idem_b");
    const std::vector<std::string> common = {"train", "network.width=16", "grid_n=16", "t_end=2", "checkpoints=10"};
    auto with = [&](const fs::path& p, const std::string& threads) {
        auto v = common;
        v.insert(v.end(), {"--out", p.string(), "--threads", threads});
        return v;
    };
    REQUIRE(cli(with(a, "1")) == kExitOk);
    REQUIRE(cli(with(b, "2")) == kExitOk);
    REQUIRE(cli(with(a, "1")) == kExitOk);
    int files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        const auto name = e.path().filename();
        CAPTURE(name.string());
        REQUIRE(fs::exists(b / name));
        if (name.string().find(".provenance.json") != std::string::npos) {
            Json pa = Json::parse(slurp(e.path())), pb = Json::parse(slurp(b / name));
            for (const char* k : {"started_at", "wall_seconds"}) {
                pa.erase(k);
                pb.erase(k);
            }
            CHECK(pa == pb);
        } else {
            CHECK(slurp(e.path()) == slurp(b / name));
        }
        ++files;
    }
    CHECK(files >= 6);
    CHECK(fs::exists(a / "final_params_m16.ntksnap"));
    CHECK(fs::exists(a / "envelope_m16.json"));
}

TEST_CASE("cli: seed override changes the master seed") {
    const fs::path a = scratch("seed_a");
    REQUIRE(cli({"noise", "m=16", "n=8", "--seed", "9", "--out", a.string()}) == kExitOk);
    const Json prov = Json::parse(slurp(a / "noise.provenance.json"));
    CHECK(prov.at("master_seed") == 9);
    const Json cfg = Json::parse(slurp(a / "config.resolved.json"));
    CHECK(cfg.at("seed") == 9);
}
