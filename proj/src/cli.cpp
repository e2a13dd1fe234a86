#include "bnf/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bnf/config.hpp"
#include "bnf/dynamics.hpp"
#include "bnf/normalform.hpp"
#include "bnf/verify.hpp"

namespace bnf {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// for terminal messages
std::string brief(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

std::string signed_tuple(const ScanRecord& r) {
    std::string s;
    for (std::size_t i = 0; i < r.clusters.size(); ++i) {
        if (i) s += ' ';
        s += (static_cast<int>(i) < r.ell ? '+' : '-') + std::to_string(r.clusters[i]);
    }
    return s;
}

json record_json(const ScanRecord& r) {
    return {{"tuple", r.clusters}, {"ell", r.ell}, {"divisor", r.divisor}, {"mu", r.mu}, {"weighted", r.weighted}};
}

json histogram_json(const std::map<int, long long>& h) {
    json out = json::object();
    for (const auto& [bin, count] : h) out[bin == kZeroBin ? "zero" : std::to_string(bin)] = count;
    return out;
}

struct Context {
    RunConfig cfg;
    fs::path out_dir;
    std::ostream& out;

    json stamp(json doc, const std::string& command) const {
        doc["tool"] = kToolName;
        doc["version"] = kToolVersion;
        doc["config_hash"] = cfg.hash();
        doc["seed"] = cfg.seed;
        doc["command"] = command;
        return doc;
    }

    void write_json(const std::string& name, const json& doc) const {
        fs::create_directories(out_dir);
        std::ofstream f(out_dir / name, std::ios::binary);
        f << doc.dump(2) << '\n';
        if (!f) throw std::runtime_error("cannot write " + (out_dir / name).string());
    }

    void write_text(const std::string& name, const std::string& text) const {
        fs::create_directories(out_dir);
        std::ofstream f(out_dir / name, std::ios::binary);
        f << text;
        if (!f) throw std::runtime_error("cannot write " + (out_dir / name).string());
    }
};

int top_degree(const RunConfig& cfg) { return std::max(cfg.nonlinearity.highest_power(), cfg.r0 + 2); }

void cmd_spectrum(const Context& cx) {
    const Spectrum spec = build_spectrum(cx.cfg);
    const ClusterParams& cp = spec.cluster_params();
    std::ostringstream csv;
    csv << "n,lambda,omega,multiplicity,first_mode\n";
    json clusters = json::array();
    bool increasing = true;
    bool within = true;
    bool disjoint = true;
    double min_gap = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= spec.n_max(); ++n) {
        csv << n << ',' << num(spec.lambda(n)) << ',' << num(spec.omega(n)) << ',' << spec.multiplicity(n) << ','
            << spec.first_mode(n) << '\n';
        clusters.push_back({{"n", n},
                            {"lambda", spec.lambda(n)},
                            {"omega", spec.omega(n)},
                            {"multiplicity", spec.multiplicity(n)}});
        const double center = 2.0 * std::numbers::pi * n / cp.tau + cp.alpha;
        const double width = cp.c0 / std::pow(n, cp.delta);
        within = within && std::abs(spec.lambda(n) - center) <= width * (1.0 + 1e-12);
        within = within && spec.multiplicity(n) <= cp.C0 * std::pow(n, cp.D) * (1.0 + 1e-12);
        if (n < spec.n_max()) {
            const double gap = spec.omega(n + 1) - spec.omega(n);
            increasing = increasing && gap > 0.0;
            min_gap = std::min(min_gap, gap);
            const double next_low = 2.0 * std::numbers::pi * (n + 1) / cp.tau + cp.alpha - cp.c0 / std::pow(n + 1, cp.delta);
            disjoint = disjoint && next_low > center + width;
        }
    }
    const json doc = {{"manifold", {{"d", spec.d()}, {"m", spec.mass()}, {"n_max", spec.n_max()}}},
                      {"clusters", clusters},
                      {"cluster_params",
                       {{"tau", cp.tau},
                        {"alpha", cp.alpha},
                        {"c0", cp.c0},
                        {"delta", cp.delta},
                        {"C0", cp.C0},
                        {"D", cp.D},
                        {"n0", cp.n0}}},
                      {"cluster_check",
                       {{"increasing", increasing},
                        {"within_windows", within},
                        {"disjoint_windows", disjoint},
                        {"min_gap", std::isfinite(min_gap) ? json(min_gap) : json(nullptr)}}}};
    cx.write_text("spectrum.csv", csv.str());
    cx.write_json("spectrum.json", cx.stamp(doc, "spectrum"));
    cx.out << "spectrum: " << spec.n_max() << " clusters, " << spec.mode_count() << " modes, cluster check "
           << (increasing && within && disjoint ? "ok" : "FAILED") << '\n';
}

void cmd_divisor_scan(const Context& cx, std::optional<int> k_flag) {
    const Spectrum spec = build_spectrum(cx.cfg);
    const int k_max = k_flag.value_or(cx.cfg.scan_k);
    if (k_max < 1) throw ConfigError("--k", "must be >= 1");
    std::ostringstream csv;
    csv << "k,ell,tuple,divisor,mu,weighted\n";
    json scans = json::array();
    std::optional<ScanRecord> best;
    long long flagged = 0;
    for (int k = 1; k <= k_max; ++k) {
        for (int ell = 0; ell <= k + 1; ++ell) {
            const ScanReport rep =
                divisor_bound_scan(spec, k, ell, cx.cfg.nu_bar_for(k), static_cast<std::size_t>(cx.cfg.keep_lowest));
            for (const auto& r : rep.lowest) {
                csv << k << ',' << ell << ',' << signed_tuple(r) << ',' << num(r.divisor) << ',' << num(r.mu) << ','
                    << num(r.weighted) << '\n';
            }
            json fl = json::array();
            for (const auto& r : rep.flagged) fl.push_back(record_json(r));
            flagged += static_cast<long long>(rep.flagged.size());
            json entry = {{"k", k},
                          {"ell", ell},
                          {"nu_bar", rep.nu_bar},
                          {"tuples", rep.tuples},
                          {"histogram", histogram_json(rep.histogram)},
                          {"flagged", fl}};
            if (rep.tuples > 0) {
                entry["min"] = rep.min_weighted;
                entry["argmin"] = record_json(rep.argmin);
                if (!best || rep.min_weighted < best->weighted) best = rep.argmin;
            } else {
                entry["min"] = nullptr;
                entry["argmin"] = nullptr;
            }
            scans.push_back(std::move(entry));
        }
    }
    json doc = {{"n_max", spec.n_max()}, {"m", spec.mass()}, {"k_max", k_max}, {"scans", scans}, {"flagged", flagged}};
    doc["min"] = best ? json(best->weighted) : json(nullptr);
    doc["argmin"] = best ? record_json(*best) : json(nullptr);
    cx.write_text("divisor_scan.csv", csv.str());
    cx.write_json("divisor_scan.json", cx.stamp(doc, "divisor-scan"));
    cx.out << "divisor-scan: k <= " << k_max << ", min weighted divisor "
           << (best ? brief(best->weighted) : std::string("n/a")) << ", " << flagged << " flagged\n";
}

void cmd_mass_scan(const Context& cx) {
    const RunConfig& c = cx.cfg;
    std::vector<double> grid;
    for (int i = 0; i < c.m_count; ++i) {
        grid.push_back(c.m_count == 1 ? c.m_min : c.m_min + (c.m_max - c.m_min) * i / (c.m_count - 1));
    }
    const std::vector<MassScanRow> rows = mass_scan(c.d, c.scan_k, grid, c.n_max, c.nu_bar_for(c.scan_k), c.threads);
    std::ostringstream csv;
    csv << "m,divisor,mu,weighted,tuple,flagged\n";
    json arr = json::array();
    std::map<int, long long> hist;
    const MassScanRow* best = nullptr;
    for (const auto& r : rows) {
        csv << num(r.m) << ',' << num(r.argmin.divisor) << ',' << num(r.argmin.mu) << ',' << num(r.c) << ','
            << signed_tuple(r.argmin) << ',' << r.flagged << '\n';
        arr.push_back({{"m", r.m}, {"c", r.c}, {"argmin", record_json(r.argmin)}, {"flagged", r.flagged}});
        ++hist[r.c > 0.0 ? static_cast<int>(std::floor(std::log10(r.c))) : kZeroBin];
        if (best == nullptr || r.c < best->c) best = &r;
    }
    json doc = {{"k", c.scan_k},
                {"n_max", c.n_max},
                {"nu_bar", c.nu_bar_for(c.scan_k)},
                {"rows", arr},
                {"histogram", histogram_json(hist)}};
    doc["min"] = best ? json(best->c) : json(nullptr);
    doc["argmin"] = best ? json{{"m", best->m}, {"record", record_json(best->argmin)}} : json(nullptr);
    cx.write_text("mass_scan.csv", csv.str());
    cx.write_json("mass_scan.json", cx.stamp(doc, "mass-scan"));
    cx.out << "mass-scan: " << rows.size() << " masses, min c " << (best ? brief(best->c) : std::string("n/a"))
           << (best ? " at m = " + brief(best->m) : std::string()) << '\n';
}

void cmd_hamiltonian(const Context& cx, std::optional<int> degree_flag) {
    const int top = degree_flag.value_or(top_degree(cx.cfg));
    if (top < 3) throw ConfigError("--max-degree", "must be >= 3");
    const PolyHamiltonian h = build_hamiltonian(cx.cfg, top);
    json doc = to_json(h.parts);
    doc["max_degree"] = top;
    doc["manifold"] = {{"d", cx.cfg.d}, {"m", cx.cfg.m}, {"n_max", cx.cfg.n_max}};
    cx.write_json("hamiltonian.json", cx.stamp(doc, "hamiltonian"));
    cx.out << "hamiltonian: degrees";
    for (const auto& [deg, p] : h.parts) cx.out << ' ' << deg << " (" << p.size() << " terms)";
    cx.out << '\n';
}

PolyFamily load_family(const std::vector<std::string>& files) {
    PolyFamily parts;
    for (const auto& path : files) {
        std::ifstream in(path);
        if (!in) throw ConfigError("--hamiltonian", "cannot open " + path);
        json j;
        try {
            in >> j;
        } catch (const json::parse_error& e) {
            throw ConfigError("--hamiltonian", path + ": malformed JSON: " + e.what());
        }
        for (auto& [deg, p] : family_from_json(j)) {
            auto [it, inserted] = parts.try_emplace(deg, p);
            if (!inserted) it->second += p;
        }
    }
    return parts;
}

void cmd_normalform(const Context& cx, const std::vector<std::string>& files) {
    const Spectrum spec = build_spectrum(cx.cfg);
    const PolyFamily parts = files.empty() ? build_hamiltonian(cx.cfg, cx.cfg.r0 + 2).parts : load_family(files);
    for (const auto& [deg, p] : parts)
        for (const auto& [key, c] : p.terms())
            for (int m : key.u) (void)spec.cluster_of(m);
    const NormalFormResult nf = birkhoff(parts, spec, cx.cfg.r0);
    json doc = to_json(nf);
    json comm = json::object();
    double worst = 0.0;
    for (const auto& [deg, z] : nf.z_parts) {
        const double c = check_action_commutation(z, spec);
        comm[std::to_string(deg)] = c;
        worst = std::max(worst, c);
    }
    doc["action_commutation"] = comm;
    doc["r0"] = cx.cfg.r0;
    cx.write_json("normalform.json", cx.stamp(doc, "normalform"));
    cx.out << "normalform: r0 = " << cx.cfg.r0 << ", Z terms";
    for (const auto& [deg, z] : nf.z_parts) cx.out << ' ' << deg << ':' << z.size();
    cx.out << ", max |{J_n, Z}| = " << brief(worst) << '\n';
}

int observe_every(const RunConfig& c) {
    return std::max(1, static_cast<int>(std::lround(1.0 / (c.samples_per_unit_time * c.integrator.dt))));
}

void cmd_simulate(const Context& cx) {
    const RunConfig& c = cx.cfg;
    const PolyHamiltonian h = build_hamiltonian(c, c.nonlinearity.highest_power());
    State u0 = random_unit_state(h.spec, c.s, c.seed);
    for (auto& z : u0) z *= c.amplitude;
    const Trajectory tr = integrate(u0, h, c.integrator, observe_every(c), c.s);
    std::ostringstream csv;
    csv << "t,G,E";
    for (int n = 1; n <= h.spec.n_max(); ++n) csv << ",J_" << n;
    csv << '\n';
    double action_change = 0.0;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        csv << num(tr.times[i]) << ',' << num(tr.hamiltonian[i]) << ',' << num(tr.energy[i]);
        for (std::size_t n = 0; n < tr.actions[i].size(); ++n) {
            csv << ',' << num(tr.actions[i][n]);
            action_change = std::max(action_change, std::pow(static_cast<double>(n + 1), 2.0 * c.s) *
                                                        std::abs(tr.actions[i][n] - tr.actions[0][n]));
        }
        csv << '\n';
    }
    const json doc = {{"samples", tr.times.size()},
                      {"t_end", tr.times.back()},
                      {"amplitude", c.amplitude},
                      {"s", c.s},
                      {"relative_energy_drift", tr.relative_energy_drift()},
                      {"max_weighted_action_change", action_change},
                      {"initial_energy", tr.energy.front()},
                      {"final_energy", tr.energy.back()}};
    cx.write_text("trajectory.csv", csv.str());
    cx.write_json("simulate.json", cx.stamp(doc, "simulate"));
    cx.out << "simulate: " << tr.times.size() << " samples to t = " << brief(tr.times.back())
           << ", relative Hamiltonian drift " << brief(tr.relative_energy_drift()) << '\n';
}

void cmd_drift_scan(const Context& cx) {
    const RunConfig& c = cx.cfg;
    const PolyHamiltonian h = build_hamiltonian(c, top_degree(c));
    PolyFamily nf_input;
    for (const auto& [deg, p] : h.parts)
        if (deg <= c.r0 + 2) nf_input.emplace(deg, p);
    const NormalFormResult nf = birkhoff(nf_input, h.spec, c.r0);
    PolyHamiltonian flow{h.spec, {}};
    for (const auto& [deg, p] : h.parts)
        if (deg <= c.nonlinearity.highest_power()) flow.parts.emplace(deg, p);
    DriftOptions opts;
    opts.seed = c.seed;
    opts.samples_per_unit_time = c.samples_per_unit_time;
    opts.threads = c.threads;
    const DriftTable table = drift_experiment(flow, nf, c.eps, c.r, c.s, c.integrator, opts);
    std::ostringstream csv;
    csv << "eps,t_end,raw_drift,transformed_drift,energy_increment,hamiltonian_drift,samples\n";
    for (const auto& r : table.rows) {
        csv << num(r.eps) << ',' << num(r.t_end) << ',' << num(r.raw_drift) << ',' << num(r.transformed_drift) << ','
            << num(r.energy_increment) << ',' << num(r.hamiltonian_drift) << ',' << r.samples << '\n';
    }
    json doc = to_json(table);
    doc["r0"] = c.r0;
    cx.write_text("drift.csv", csv.str());
    cx.write_json("drift.json", cx.stamp(doc, "drift-scan"));
    cx.out << "drift-scan: raw exponent " << brief(table.raw_fit.exponent) << ", transformed exponent "
           << brief(table.transformed_fit.exponent) << '\n';
}

int cmd_verify(const Context& cx) {
    const std::vector<CheckResult> checks = run_verify(cx.cfg);
    bool all = true;
    for (const auto& c : checks) {
        all = all && c.passed;
        cx.out << (c.passed ? "PASS " : "FAIL ") << c.name << " (value " << brief(c.value) << ", threshold "
               << brief(c.threshold) << (c.detail.empty() ? "" : ", " + c.detail) << ")\n";
    }
    cx.write_json("verify.json", cx.stamp(to_json(checks), "verify"));
    cx.out << (all ? "verify: all checks passed\n" : "verify: some checks FAILED\n");
    return all ? kExitOk : kExitVerifyFailed;
}

void report_error(std::ostream& err, const std::optional<fs::path>& out_dir, int code, const std::string& kind,
                  const std::string& message, const std::vector<FieldIssue>& issues, json extra = json::object()) {
    json diag = json::array();
    for (const auto& i : issues) diag.push_back({{"field", i.field}, {"message", i.message}});
    json error = {{"kind", kind}, {"message", message}, {"diagnostics", diag}};
    error.update(extra);
    const json doc = {{"error", error},
                      {"exit_code", code},
                      {"tool", kToolName},
                      {"version", kToolVersion}};
    err << doc.dump() << '\n';
    if (out_dir) {
        std::error_code ec;
        fs::create_directories(*out_dir, ec);
        std::ofstream f(*out_dir / "error.json", std::ios::binary);
        if (f) f << doc.dump(2) << '\n';
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Birkhoff normal form toolkit for Klein-Gordon equations on spheres", "bnf"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_flag;
    std::optional<std::uint64_t> seed_flag;
    std::optional<int> threads_flag;
    app.add_option("--config", config_path, "run configuration (JSON)")->required();
    app.add_option("--out", out_flag, "output directory (overrides output_dir)");
    app.add_option("--seed", seed_flag, "random seed (overrides experiment.seed)");
    app.add_option("--threads", threads_flag, "worker threads (overrides threads)");

    std::optional<int> k_flag;
    std::optional<int> degree_flag;
    std::vector<std::string> ham_files;
    auto* sp = app.add_subcommand("spectrum", "frequency table and cluster check");
    auto* ds = app.add_subcommand("divisor-scan", "small divisor scan for every k and ell");
    ds->add_option("--k", k_flag, "largest k (overrides divisor_scan.k)");
    auto* ms = app.add_subcommand("mass-scan", "empirical divisor constant over a mass grid");
    auto* ha = app.add_subcommand("hamiltonian", "Taylor polynomial of the nonlinearity");
    ha->add_option("--max-degree", degree_flag, "highest degree kept");
    auto* nfc = app.add_subcommand("normalform", "Birkhoff normal form to order r0");
    nfc->add_option("--hamiltonian", ham_files, "Hamiltonian JSON file(s); default: built from the config");
    auto* si = app.add_subcommand("simulate", "integrate the truncated flow");
    auto* dr = app.add_subcommand("drift-scan", "action drift against eps");
    auto* ve = app.add_subcommand("verify", "run the invariant suite");
    for (auto* s : {sp, ds, ms, ha, nfc, si, dr, ve}) s->fallthrough();

    std::optional<fs::path> out_dir;
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return kExitOk;
        }
        report_error(err, out_dir, kExitValidation, "validation", e.what(), {{"arguments", e.what()}});
        return kExitValidation;
    }
    if (!out_flag.empty()) out_dir = out_flag;

    try {
        RunConfig cfg = RunConfig::load(config_path);
        if (seed_flag) cfg.seed = *seed_flag;
        if (threads_flag) cfg.threads = *threads_flag;
        if (!out_flag.empty()) cfg.output_dir = out_flag;
        out_dir = cfg.output_dir;
        cfg.validate();
        const Context cx{cfg, fs::path(cfg.output_dir), out};

        if (sp->parsed()) cmd_spectrum(cx);
        if (ds->parsed()) cmd_divisor_scan(cx, k_flag);
        if (ms->parsed()) cmd_mass_scan(cx);
        if (ha->parsed()) cmd_hamiltonian(cx, degree_flag);
        if (nfc->parsed()) cmd_normalform(cx, ham_files);
        if (si->parsed()) cmd_simulate(cx);
        if (dr->parsed()) cmd_drift_scan(cx);
        if (ve->parsed()) return cmd_verify(cx);
        return kExitOk;
    } catch (const ConfigError& e) {
        report_error(err, out_dir, kExitValidation, "validation", e.what(), e.issues());
        return kExitValidation;
    } catch (const NumericError& e) {
        std::string kind = "numeric";
        json extra = json::object();
        if (const auto* nr = dynamic_cast<const NearResonantMass*>(&e)) {
            kind = "near-resonant-mass";
            extra["step"] = nr->step();
        }
        if (const auto* dv = dynamic_cast<const DivergenceError*>(&e)) {
            kind = "divergence";
            extra["last_valid_time"] = dv->last_valid_time();
        }
        if (dynamic_cast<const FlowFailure*>(&e)) kind = "flow-failure";
        report_error(err, out_dir, kExitNumeric, kind, e.what(), {}, extra);
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        report_error(err, out_dir, kExitValidation, "validation", e.what(), {});
        return kExitValidation;
    } catch (const std::out_of_range& e) {
        report_error(err, out_dir, kExitValidation, "validation", e.what(), {});
        return kExitValidation;
    } catch (const json::exception& e) {
        report_error(err, out_dir, kExitValidation, "validation", e.what(), {});
        return kExitValidation;
    } catch (const std::exception& e) {
        report_error(err, out_dir, kExitNumeric, "runtime", e.what(), {});
        return kExitNumeric;
    }
}

}  // namespace bnf
