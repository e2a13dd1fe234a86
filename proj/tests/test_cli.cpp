#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bnf/cli.hpp"
#include "bnf/config.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bnf;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "bnf");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("bnf_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(const fs::path& dir, const json& j) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << j.dump();
    return p;
}

const json kSmall = {{"manifold", {{"m", 1.0}, {"n_max", 4}}},
                     {"nonlinearity", {{"f", {{3, 1.0}}}}},
                     {"integrator", {{"dt", 0.01}, {"t_end", 1.0}}},
                     {"experiment", {{"eps", {0.2, 0.1, 0.05}}, {"seed", 7}}}};

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("FNV-1a reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("config defaults, validation and hash") {
    const RunConfig c = RunConfig::from_json(kSmall);
    CHECK(c.d == 1);
    CHECK(c.r0 == 2);
    CHECK(c.s == 2.0);
    CHECK(c.r == 1);
    CHECK(c.nu_bar_for(3) == 5.0);
    CHECK(c.integrator.scheme == Scheme::StrangSplit);
    CHECK(c.hash().size() == 16);

    CHECK(RunConfig::from_json(c.to_json()).to_json() == c.to_json());

    json other = kSmall;
    other["output_dir"] = "elsewhere";
    other["threads"] = 4;
    CHECK(RunConfig::from_json(other).hash() == c.hash());
    other["experiment"]["seed"] = 8;
    CHECK(RunConfig::from_json(other).hash() != c.hash());

    try {
        RunConfig::from_json({{"manifold", {{"n_max", 0}}}, {"integrator", {{"scheme", "euler"}}}, {"extra", 1}});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::vector<std::string> fields;
        for (const auto& i : e.issues()) fields.push_back(i.field);
        const auto has = [&](const std::string& f) { return std::find(fields.begin(), fields.end(), f) != fields.end(); };
        CHECK(has("manifold.m"));
        CHECK(has("manifold.n_max"));
        CHECK(has("nonlinearity.f"));
        CHECK(has("integrator.scheme"));
        CHECK(has("extra"));
    }

    json bad_r = kSmall;
    bad_r["experiment"]["r"] = 3;
    CHECK_THROWS_AS(RunConfig::from_json(bad_r), ConfigError);
    json s2 = kSmall;
    s2["manifold"]["d"] = 2;
    CHECK_THROWS_AS(RunConfig::from_json(s2), ConfigError);
}

TEST_CASE("malformed input exits with code 1") {
    const fs::path dir = scratch("malformed");
    std::ofstream(dir / "broken.json") << "{ not json";
    Run r = run({"spectrum", "--config", (dir / "broken.json").string(), "--out", (dir / "o").string()});
    CHECK(r.code == kExitValidation);
    const json e = json::parse(r.err);
    CHECK(e.at("exit_code") == 1);
    CHECK(e.at("error").at("kind") == "validation");
    CHECK(fs::exists(dir / "o" / "error.json"));

    json missing = kSmall;
    missing["manifold"].erase("m");
    missing["integrator"]["dt"] = -1.0;
    r = run({"spectrum", "--config", write_config(dir, missing).string(), "--out", (dir / "o").string()});
    CHECK(r.code == kExitValidation);
    const json diag = json::parse(r.err).at("error").at("diagnostics");
    CHECK(diag.size() >= 2);

    r = run({"--config", write_config(dir, kSmall).string()});
    CHECK(r.code == kExitValidation);
    r = run({"spectrum"});
    CHECK(r.code == kExitValidation);
}

TEST_CASE("numeric failure exits with code 2") {
    const fs::path dir = scratch("numeric");
    json cfg = kSmall;
    cfg["integrator"]["t_end"] = 50.0;
    cfg["experiment"]["amplitude"] = 20.0;
    const Run r = run({"simulate", "--config", write_config(dir, cfg).string(), "--out", (dir / "o").string()});
    CHECK(r.code == kExitNumeric);
    const json e = json::parse(r.err);
    CHECK(e.at("error").at("kind") == "divergence");
    CHECK(e.at("error").at("last_valid_time").get<double>() > 0.0);
}

TEST_CASE("artifacts are stamped and reproducible") {
    const fs::path dir = scratch("stamp");
    const std::string cfg = write_config(dir, kSmall).string();
    const RunConfig parsed = RunConfig::from_json(kSmall);
    for (const char* cmd : {"spectrum", "hamiltonian", "normalform", "divisor-scan"}) {
        const Run a = run({cmd, "--config", cfg, "--out", (dir / "a").string()});
        const Run b = run({cmd, "--config", cfg, "--out", (dir / "b").string(), "--threads", "2"});
        REQUIRE(a.code == 0);
        REQUIRE(b.code == 0);
    }
    for (const char* file : {"spectrum.json", "hamiltonian.json", "normalform.json", "divisor_scan.json",
                             "spectrum.csv", "divisor_scan.csv"}) {
        CHECK(slurp(dir / "a" / file) == slurp(dir / "b" / file));
    }
    for (const char* file : {"spectrum.json", "hamiltonian.json", "normalform.json", "divisor_scan.json"}) {
        const json j = json::parse(slurp(dir / "a" / file));
        CHECK(j.at("tool") == "bnf");
        CHECK(j.at("version") == kToolVersion);
        CHECK(j.at("config_hash") == parsed.hash());
        CHECK(j.at("seed") == 7);
    }

    const json spec = json::parse(slurp(dir / "a" / "spectrum.json"));
    CHECK(spec.at("cluster_check").at("increasing") == true);
    CHECK(spec.at("clusters").size() == 4);
    CHECK(lines(slurp(dir / "a" / "spectrum.csv")).front() == "n,lambda,omega,multiplicity,first_mode");

    const json scan = json::parse(slurp(dir / "a" / "divisor_scan.json"));
    CHECK(scan.at("min").get<double>() > 0.0);
    CHECK(scan.contains("argmin"));
    CHECK(scan.at("scans").front().contains("histogram"));
    CHECK(lines(slurp(dir / "a" / "divisor_scan.csv")).front() == "k,ell,tuple,divisor,mu,weighted");

    // the Hamiltonian file round-trips through normalform --hamiltonian
    const Run nf = run({"normalform", "--config", cfg, "--out", (dir / "c").string(), "--hamiltonian",
                        (dir / "a" / "hamiltonian.json").string()});
    REQUIRE(nf.code == 0);
    const json z1 = json::parse(slurp(dir / "a" / "normalform.json"));
    const json z2 = json::parse(slurp(dir / "c" / "normalform.json"));
    CHECK(z1.at("z_parts") == z2.at("z_parts"));
    CHECK(z1.at("generators") == z2.at("generators"));
    CHECK(z1.at("diagnostics").front().contains("min_divisor_used"));
    CHECK(z1.at("action_commutation").at("4") == 0.0);
}

TEST_CASE("simulate, drift-scan and mass-scan outputs") {
    const fs::path dir = scratch("runs");
    const std::string cfg = write_config(dir, kSmall).string();
    const std::string out = (dir / "o").string();

    REQUIRE(run({"simulate", "--config", cfg, "--out", out}).code == 0);
    const auto traj = lines(slurp(dir / "o" / "trajectory.csv"));
    CHECK(traj.front() == "t,G,E,J_1,J_2,J_3,J_4");
    CHECK(traj.size() == 102);

    REQUIRE(run({"drift-scan", "--config", cfg, "--out", out, "--seed", "3"}).code == 0);
    const auto drift = lines(slurp(dir / "o" / "drift.csv"));
    CHECK(drift.front() == "eps,t_end,raw_drift,transformed_drift,energy_increment,hamiltonian_drift,samples");
    CHECK(drift.size() == 4);
    const json dj = json::parse(slurp(dir / "o" / "drift.json"));
    for (const char* key : {"exponent", "constant", "r", "s", "seed"}) CHECK(dj.contains(key));
    CHECK(dj.at("seed") == 3);

    json ms = kSmall;
    ms["mass_scan"] = {{"m_min", 0.8}, {"m_max", 1.2}, {"m_count", 3}};
    ms["divisor_scan"] = {{"k", 2}};
    REQUIRE(run({"mass-scan", "--config", write_config(dir, ms).string(), "--out", out}).code == 0);
    const auto mass = lines(slurp(dir / "o" / "mass_scan.csv"));
    CHECK(mass.front() == "m,divisor,mu,weighted,tuple,flagged");
    CHECK(mass.size() == 4);
    const json mj = json::parse(slurp(dir / "o" / "mass_scan.json"));
    CHECK(mj.contains("min"));
    CHECK(mj.contains("argmin"));
    CHECK(mj.contains("histogram"));
}

TEST_CASE("verify on the shipped default config") {
    const fs::path dir = scratch("verify");
    const Run r = run({"verify", "--config", std::string(BNF_SOURCE_DIR) + "/configs/default.json", "--out",
                       (dir / "o").string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("FAIL") == std::string::npos);
    const json v = json::parse(slurp(dir / "o" / "verify.json"));
    CHECK(v.at("all_passed") == true);
    CHECK(v.at("checks").size() >= 10);
}
