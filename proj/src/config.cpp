#include "bnf/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace bnf {

namespace {

std::string join_issues(const std::vector<FieldIssue>& issues) {
    std::string out = "invalid configuration:";
    for (const auto& i : issues) out += " " + i.field + ": " + i.message + ";";
    return out;
}

using json = nlohmann::json;

// Collects diagnostics while reading one JSON object section.
class Reader {
public:
    Reader(const json& root, std::vector<FieldIssue>& issues) : root_(root), issues_(issues) {}

    // Returns the section object, or nullptr if absent or not an object.
    const json* section(const std::string& name, std::set<std::string> known) {
        if (!root_.contains(name)) return nullptr;
        const json& s = root_.at(name);
        if (!s.is_object()) {
            issue(name, "must be an object");
            return nullptr;
        }
        for (const auto& [key, value] : s.items()) {
            if (!known.count(key)) issue(name + "." + key, "unknown field");
        }
        return &s;
    }

    template <class T>
    void number(const json* sec, const std::string& sec_name, const std::string& key, T& out) {
        if (sec == nullptr || !sec->contains(key)) return;
        const json& v = sec->at(key);
        const std::string path = sec_name.empty() ? key : sec_name + "." + key;
        if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) {
                issue(path, "must be an integer");
                return;
            }
            out = v.get<T>();
        } else {
            if (!v.is_number()) {
                issue(path, "must be a number");
                return;
            }
            out = v.get<T>();
        }
    }

    void string(const json* sec, const std::string& sec_name, const std::string& key, std::string& out) {
        if (sec == nullptr || !sec->contains(key)) return;
        const json& v = sec->at(key);
        if (!v.is_string()) {
            issue(sec_name.empty() ? key : sec_name + "." + key, "must be a string");
            return;
        }
        out = v.get<std::string>();
    }

    void issue(std::string field, std::string message) { issues_.push_back({std::move(field), std::move(message)}); }

private:
    const json& root_;
    std::vector<FieldIssue>& issues_;
};

const char* scheme_name(Scheme s) { return s == Scheme::StrangSplit ? "strang-split" : "rk-adaptive"; }

}  // namespace

ConfigError::ConfigError(std::vector<FieldIssue> issues)
    : InvalidParameter(join_issues(issues)), issues_(std::move(issues)) {}

ConfigError::ConfigError(std::string field, std::string message)
    : ConfigError(std::vector<FieldIssue>{{std::move(field), std::move(message)}}) {}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RunConfig RunConfig::from_json(const json& j) {
    std::vector<FieldIssue> issues;
    RunConfig cfg;
    if (!j.is_object()) throw ConfigError("", "configuration must be a JSON object");
    Reader rd(j, issues);

    const std::set<std::string> top{"manifold",     "nonlinearity", "normal_form", "integrator", "experiment",
                                    "divisor_scan", "mass_scan",    "output_dir",  "threads"};
    for (const auto& [key, value] : j.items()) {
        if (!top.count(key)) rd.issue(key, "unknown field");
    }

    const json* man = rd.section("manifold", {"d", "m", "n_max"});
    if (man == nullptr || !man->contains("m")) rd.issue("manifold.m", "required");
    rd.number(man, "manifold", "d", cfg.d);
    rd.number(man, "manifold", "m", cfg.m);
    rd.number(man, "manifold", "n_max", cfg.n_max);

    const json* nl = rd.section("nonlinearity", {"f", "modulation", "coupling_table"});
    if (nl == nullptr || !nl->contains("f")) {
        rd.issue("nonlinearity.f", "required");
    } else {
        const json& f = nl->at("f");
        bool ok = f.is_array() && !f.empty();
        if (ok) {
            for (const auto& term : f) {
                if (!term.is_array() || term.size() != 2 || !term[0].is_number_integer() || !term[1].is_number()) {
                    ok = false;
                    break;
                }
                cfg.nonlinearity.coefficients[term[0].get<int>()] += term[1].get<double>();
            }
        }
        if (!ok) rd.issue("nonlinearity.f", "must be a nonempty list of [power, coefficient] pairs");
    }
    if (nl != nullptr && nl->contains("modulation")) {
        const json& mod = nl->at("modulation");
        bool ok = mod.is_array();
        if (ok) {
            for (const auto& t : mod) {
                if (!t.is_array() || t.size() != 4 || !t[0].is_number_integer() || !t[1].is_number_integer() ||
                    !t[2].is_number() || !t[3].is_number()) {
                    ok = false;
                    break;
                }
                cfg.nonlinearity.modulation[t[0].get<int>()].push_back(
                    {t[1].get<int>(), cplx{t[2].get<double>(), t[3].get<double>()}});
            }
        }
        if (!ok) rd.issue("nonlinearity.modulation", "must be a list of [power, index, re, im]");
    }
    rd.string(nl, "nonlinearity", "coupling_table", cfg.coupling_table);

    const json* nf = rd.section("normal_form", {"r0"});
    rd.number(nf, "normal_form", "r0", cfg.r0);

    const json* integ = rd.section("integrator", {"dt", "scheme", "local_tol", "t_end"});
    rd.number(integ, "integrator", "dt", cfg.integrator.dt);
    rd.number(integ, "integrator", "local_tol", cfg.integrator.local_tol);
    rd.number(integ, "integrator", "t_end", cfg.integrator.t_end);
    std::string scheme = scheme_name(cfg.integrator.scheme);
    rd.string(integ, "integrator", "scheme", scheme);
    if (scheme == "strang-split") {
        cfg.integrator.scheme = Scheme::StrangSplit;
    } else if (scheme == "rk-adaptive") {
        cfg.integrator.scheme = Scheme::RkAdaptive;
    } else {
        rd.issue("integrator.scheme", "must be \"strang-split\" or \"rk-adaptive\"");
    }

    const json* ex = rd.section(
        "experiment", {"eps", "s", "r", "seed", "samples_per_unit_time", "amplitude", "flow_tol"});
    if (ex != nullptr && ex->contains("eps")) {
        const json& e = ex->at("eps");
        bool ok = e.is_array();
        std::vector<double> eps;
        if (ok) {
            for (const auto& v : e) {
                if (!v.is_number()) {
                    ok = false;
                    break;
                }
                eps.push_back(v.get<double>());
            }
        }
        if (ok) {
            cfg.eps = std::move(eps);
        } else {
            rd.issue("experiment.eps", "must be a list of numbers");
        }
    }
    rd.number(ex, "experiment", "s", cfg.s);
    rd.number(ex, "experiment", "r", cfg.r);
    rd.number(ex, "experiment", "samples_per_unit_time", cfg.samples_per_unit_time);
    rd.number(ex, "experiment", "amplitude", cfg.amplitude);
    rd.number(ex, "experiment", "flow_tol", cfg.flow_tol);
    if (ex != nullptr && ex->contains("seed")) {
        const json& v = ex->at("seed");
        if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) {
            cfg.seed = v.get<std::uint64_t>();
        } else {
            rd.issue("experiment.seed", "must be a nonnegative integer");
        }
    }

    const json* ds = rd.section("divisor_scan", {"k", "nu_bar", "keep_lowest"});
    rd.number(ds, "divisor_scan", "k", cfg.scan_k);
    rd.number(ds, "divisor_scan", "keep_lowest", cfg.keep_lowest);
    if (ds != nullptr && ds->contains("nu_bar") && !ds->at("nu_bar").is_null()) {
        double nu = 0.0;
        rd.number(ds, "divisor_scan", "nu_bar", nu);
        cfg.nu_bar = nu;
    }

    const json* ms = rd.section("mass_scan", {"m_min", "m_max", "m_count"});
    rd.number(ms, "mass_scan", "m_min", cfg.m_min);
    rd.number(ms, "mass_scan", "m_max", cfg.m_max);
    rd.number(ms, "mass_scan", "m_count", cfg.m_count);

    rd.string(&j, "", "output_dir", cfg.output_dir);
    rd.number(&j, "", "threads", cfg.threads);

    // value checks on fields that parsed, skipping fields already reported
    for (auto& extra : cfg.issues()) {
        const bool seen = std::any_of(issues.begin(), issues.end(), [&](const FieldIssue& i) {
            return i.field == extra.field || extra.field.rfind(i.field + ".", 0) == 0 ||
                   i.field.rfind(extra.field + ".", 0) == 0;
        });
        if (!seen) issues.push_back(std::move(extra));
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("--config", std::string("malformed JSON: ") + e.what());
    }
    return from_json(j);
}

void RunConfig::validate() const {
    std::vector<FieldIssue> found = issues();
    if (!found.empty()) throw ConfigError(std::move(found));
}

std::vector<FieldIssue> RunConfig::issues() const {
    std::vector<FieldIssue> issues;
    auto need = [&](bool ok, const char* field, const char* message) {
        if (!ok) issues.push_back({field, message});
    };
    need(d >= 1, "manifold.d", "must be >= 1");
    need(std::isfinite(m) && m > 0.0, "manifold.m", "must be > 0");
    need(n_max >= 1, "manifold.n_max", "must be >= 1");
    try {
        nonlinearity.validate();
    } catch (const InvalidParameter& e) {
        issues.push_back({"nonlinearity.f", e.what()});
    }
    need(d == 1 || !coupling_table.empty(), "nonlinearity.coupling_table", "required for d >= 2");
    need(r0 >= 1, "normal_form.r0", "must be >= 1");
    need(integrator.dt > 0.0, "integrator.dt", "must be > 0");
    need(integrator.t_end >= integrator.dt, "integrator.t_end", "must be >= dt");
    need(integrator.local_tol > 0.0, "integrator.local_tol", "must be > 0");
    need(eps.size() >= 3, "experiment.eps", "needs at least 3 values");
    for (double e : eps) {
        if (!(e > 0.0 && e < 1.0)) {
            issues.push_back({"experiment.eps", "values must lie in (0, 1)"});
            break;
        }
    }
    need(s >= 0.0, "experiment.s", "must be >= 0");
    need(r >= 1, "experiment.r", "must be >= 1");
    need(r <= r0, "experiment.r", "must not exceed normal_form.r0");
    need(samples_per_unit_time > 0.0, "experiment.samples_per_unit_time", "must be > 0");
    need(amplitude > 0.0, "experiment.amplitude", "must be > 0");
    need(flow_tol > 0.0, "experiment.flow_tol", "must be > 0");
    need(scan_k >= 1, "divisor_scan.k", "must be >= 1");
    need(!nu_bar || *nu_bar >= 0.0, "divisor_scan.nu_bar", "must be >= 0");
    need(keep_lowest >= 0, "divisor_scan.keep_lowest", "must be >= 0");
    need(m_min > 0.0, "mass_scan.m_min", "must be > 0");
    need(m_max >= m_min, "mass_scan.m_max", "must be >= m_min");
    need(m_count >= 1, "mass_scan.m_count", "must be >= 1");
    need(threads >= 1, "threads", "must be >= 1");
    return issues;
}

json RunConfig::to_json() const {
    json f = json::array();
    for (const auto& [p, a] : nonlinearity.coefficients) f.push_back({p, a});
    json mod = json::array();
    for (const auto& [p, list] : nonlinearity.modulation)
        for (const auto& t : list) mod.push_back({p, t.index, t.value.real(), t.value.imag()});
    return {{"manifold", {{"d", d}, {"m", m}, {"n_max", n_max}}},
            {"nonlinearity", {{"f", f}, {"modulation", mod}, {"coupling_table", coupling_table}}},
            {"normal_form", {{"r0", r0}}},
            {"integrator",
             {{"dt", integrator.dt},
              {"scheme", scheme_name(integrator.scheme)},
              {"local_tol", integrator.local_tol},
              {"t_end", integrator.t_end}}},
            {"experiment",
             {{"eps", eps},
              {"s", s},
              {"r", r},
              {"seed", seed},
              {"samples_per_unit_time", samples_per_unit_time},
              {"amplitude", amplitude},
              {"flow_tol", flow_tol}}},
            {"divisor_scan",
             {{"k", scan_k}, {"nu_bar", nu_bar ? json(*nu_bar) : json(nullptr)}, {"keep_lowest", keep_lowest}}},
            {"mass_scan", {{"m_min", m_min}, {"m_max", m_max}, {"m_count", m_count}}},
            {"output_dir", output_dir},
            {"threads", threads}};
}

std::string RunConfig::hash() const {
    json j = to_json();
    j.erase("output_dir");
    j.erase("threads");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
    return buf;
}

Spectrum build_spectrum(const RunConfig& cfg) { return build_sphere_spectrum({cfg.d, cfg.m}, cfg.n_max); }

PolyHamiltonian build_hamiltonian(const RunConfig& cfg, int max_degree) {
    const Spectrum spec = build_spectrum(cfg);
    if (cfg.coupling_table.empty()) return taylor_hamiltonian(cfg.nonlinearity, spec, max_degree);
    std::ifstream in(cfg.coupling_table);
    if (!in) throw ConfigError("nonlinearity.coupling_table", "cannot open " + cfg.coupling_table);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("nonlinearity.coupling_table", std::string("malformed JSON: ") + e.what());
    }
    const CouplingTable table = CouplingTable::from_json(j);
    return taylor_hamiltonian(cfg.nonlinearity, spec, max_degree, &table);
}

}  // namespace bnf
