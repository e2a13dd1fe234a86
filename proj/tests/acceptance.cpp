// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "bnf/dynamics.hpp"
#include "bnf/kgmodel.hpp"
#include "bnf/normalform.hpp"
#include "bnf/polyalg.hpp"
#include "bnf/spectrum.hpp"
#include "oracles.hpp"

using namespace bnf;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

Spectrum circle(int n_max) { return build_sphere_spectrum({1, 1.0}, n_max); }

PolyHamiltonian kg(int n_max, std::map<int, double> coeffs, int max_degree) {
    Nonlinearity nl;
    nl.coefficients = std::move(coeffs);
    return taylor_hamiltonian(nl, circle(n_max), max_degree);
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---- independent oracles ----

bool oracle_resonant(const MonomialKey& k, const Spectrum& spec) {
    std::vector<int> a, b;
    for (int m : k.u) a.push_back(spec.cluster_of(m));
    for (int m : k.ubar) b.push_back(spec.cluster_of(m));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
}

HomPoly oracle_resonant_part(const HomPoly& p, const Spectrum& spec) {
    HomPoly out(p.degree());
    for (const auto& [k, c] : p.terms())
        if (oracle_resonant(k, spec)) out.add(k, c);
    return out;
}

// F_key = Q_key / (i Omega) on nonresonant keys
HomPoly oracle_generator(const HomPoly& q, const Spectrum& spec) {
    HomPoly f(q.degree());
    for (const auto& [k, c] : q.terms()) {
        if (oracle_resonant(k, spec)) continue;
        double omega = 0.0;
        for (int m : k.u) omega += std::sqrt(std::pow(spec.lambda(spec.cluster_of(m)), 2) + 1.0);
        for (int m : k.ubar) omega -= std::sqrt(std::pow(spec.lambda(spec.cluster_of(m)), 2) + 1.0);
        f.add(k, c / (cplx{0.0, 1.0} * omega));
    }
    return f;
}

HomPoly explicit_g2(const Spectrum& spec) {
    HomPoly g(2);
    for (const Mode& m : spec.modes()) g.add(MonomialKey({m.id}, {m.id}), std::sqrt(m.cluster * m.cluster + 1.0));
    return g;
}

double g2_value(const State& u, const Spectrum& spec) {
    double s = 0.0;
    for (const Mode& m : spec.modes()) s += std::sqrt(m.cluster * m.cluster + 1.0) * std::norm(u[m.id]);
    return s;
}

std::vector<double> oracle_actions(const State& u, const Spectrum& spec) {
    std::vector<double> j(static_cast<std::size_t>(spec.n_max()), 0.0);
    for (const Mode& m : spec.modes()) j[static_cast<std::size_t>(m.cluster - 1)] += std::norm(u[m.id]);
    return j;
}

// least squares slope of log y against log x
double slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<State> directions(const Spectrum& spec, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<State> out;
    for (int i = 0; i < count; ++i) {
        State u = oracle::random_state(rng, spec.mode_count(), 1.0);
        const double n = oracle::state_norm(u);
        for (auto& z : u) z /= n;
        out.push_back(std::move(u));
    }
    return out;
}

// ---- criteria ----

Outcome c1_homological() {
    const Spectrum spec = circle(6);
    std::vector<int> modes(spec.mode_count());
    for (std::size_t i = 0; i < modes.size(); ++i) modes[i] = static_cast<int>(i);
    const HomPoly g2 = explicit_g2(spec);
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    bool real = true;
    for (int t = 0; t < 50; ++t) {
        const HomPoly q = oracle::random_poly(rng, 3 + t % 3, modes, 30, true);
        const HomologicalSolution sol = solve_homological(q, spec);
        const HomPoly res = poisson_bracket(sol.F, g2) + q - sol.Z;
        worst = std::max(worst, res.max_abs() / q.max_abs());
        real = real && reality_check(sol.F) && reality_check(sol.Z);
    }
    return {worst <= 1e-12 && real,
            "max ||{F,G2}+Q-Z|| / ||Q|| = " + fmt("%.3g", worst) + " (tol 1e-12), F and Z real: " +
                (real ? "yes" : "no")};
}

Outcome c2_commutation() {
    const PolyHamiltonian h = kg(8, {{3, 1.0}}, 4);
    const NormalFormResult nf = birkhoff(h.parts, h.spec, 2);
    double worst = 0.0;
    for (const auto& [deg, z] : nf.z_parts) {
        for (int a = 1; a <= h.spec.n_max(); ++a) {
            HomPoly j(2);
            const int first = h.spec.first_mode(a);
            for (int id = first; id < first + h.spec.multiplicity(a); ++id) j.add(MonomialKey({id}, {id}), 1.0);
            worst = std::max(worst, poisson_bracket(j, z).max_abs());
        }
    }
    const bool z3_empty = nf.z_parts.at(3).empty();
    return {worst == 0.0 && z3_empty && !nf.z_parts.at(4).empty(),
            "max |{J_a, Z}| = " + fmt("%.3g", worst) + ", degree-3 Z empty: " + (z3_empty ? "yes" : "no") +
                ", degree-4 Z terms: " + std::to_string(nf.z_parts.at(4).size())};
}

Outcome c3_second_order() {
    const PolyHamiltonian h = kg(4, {{3, 1.0}, {4, 1.0}}, 4);
    const NormalFormResult nf = birkhoff(h.parts, h.spec, 2);
    const HomPoly& q3 = h.parts.at(3);
    const HomPoly& q4 = h.parts.at(4);
    const HomPoly f3 = oracle_generator(q3, h.spec);
    const HomPoly expect = oracle_resonant_part(q4 + poisson_bracket(f3, q3) * cplx{0.5}, h.spec);
    const double rel = oracle::rel_diff(nf.z_parts.at(4), expect);
    return {rel <= 1e-10 && !expect.empty(), "relative deviation " + fmt("%.3g", rel) + " (tol 1e-10), " +
                                                 std::to_string(expect.size()) + " oracle terms"};
}

Outcome c4_remainder() {
    const PolyHamiltonian h = kg(8, {{3, 1.0}}, 3);
    const NormalFormResult nf = birkhoff(h.parts, h.spec, 2);
    const NormalFormTransform T(nf.generators, 1e-12);
    const std::vector<double> amps{0.1, 0.05, 0.025};
    const auto dirs = directions(h.spec, 4, 11);
    std::vector<double> dev;
    for (double a : amps) {
        double worst = 0.0;
        for (const State& d : dirs) {
            State u = d;
            for (auto& z : u) z *= a;
            const State tu = T.apply(u);
            const double lhs = g2_value(tu, h.spec) + evaluate(h.parts, tu).real();
            const double rhs = g2_value(u, h.spec) + evaluate(nf.z_parts, u).real();
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        dev.push_back(worst);
    }
    const double e = slope(amps, dev);
    return {e >= 4.5 && e <= 5.5, "fitted exponent " + fmt("%.3f", e) + " (window [4.5, 5.5])"};
}

Outcome c5_near_identity() {
    const PolyHamiltonian h = kg(8, {{3, 1.0}}, 3);
    const NormalFormResult nf = birkhoff(h.parts, h.spec, 2);
    const NormalFormTransform T(nf.generators);
    const std::vector<double> amps{0.1, 0.05, 0.025};
    // unit in the omega-weighted energy, as in the drift runs
    std::vector<State> dirs;
    for (std::uint64_t k = 0; k < 4; ++k) dirs.push_back(random_unit_state(h.spec, 0.0, 5 + k));
    std::vector<double> fwd, inv;
    for (double a : amps) {
        double wf = 0.0, wi = 0.0;
        for (const State& d : dirs) {
            State u = d;
            for (auto& z : u) z *= a;
            State tf = T.apply(u), ti = T.inverse(u);
            for (std::size_t j = 0; j < u.size(); ++j) {
                tf[j] -= u[j];
                ti[j] -= u[j];
            }
            wf = std::max(wf, oracle::state_norm(tf));
            wi = std::max(wi, oracle::state_norm(ti));
        }
        fwd.push_back(wf);
        inv.push_back(wi);
    }
    const double ef = slope(amps, fwd), ei = slope(amps, inv);
    const bool ok = ef >= 1.8 && ef <= 2.2 && ei >= 1.8 && ei <= 2.2;
    return {ok, "exponents forward " + fmt("%.3f", ef) + ", inverse " + fmt("%.3f", ei) + " (window [1.8, 2.2])"};
}

Outcome c6_drift() {
    const PolyHamiltonian h = kg(8, {{3, 1.0}}, 3);
    // normal form built to r0 = 2 >= r = 1
    const NormalFormResult nf = birkhoff(h.parts, h.spec, 2);
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    const std::vector<double> eps{0.1, 0.05, 0.025};
    const DriftTable t = drift_experiment(h, nf, eps, 1, 2.0, cfg);
    std::vector<double> raw, tr;
    bool bound = true;
    for (const auto& row : t.rows) {
        raw.push_back(row.raw_drift);
        tr.push_back(row.transformed_drift);
        bound = bound && row.raw_drift <= 10.0 * std::pow(row.eps, 3) && row.t_end >= 1.0 / row.eps - 1e-9;
    }
    const double er = slope(eps, raw), et = slope(eps, tr);
    const bool ok = et >= 2.5 && et - er >= 0.5 && bound;
    return {ok, "transformed exponent " + fmt("%.3f", et) + ", raw exponent " + fmt("%.3f", er) +
                    ", gap " + fmt("%.3f", et - er) + " (need >= 2.5 and gap >= 0.5), D <= 10 eps^3 at all eps: " +
                    (bound ? "yes" : "no")};
}

Outcome c7_resonant_flow() {
    const PolyHamiltonian h = kg(8, {{3, 1.0}}, 3);
    const NormalFormResult nf = birkhoff(h.parts, h.spec, 2);
    const PolyHamiltonian z{h.spec, nf.z_parts};
    State u0 = random_unit_state(h.spec, 2.0, 1);
    for (auto& c : u0) c *= 0.1;
    const auto j0 = oracle_actions(u0, h.spec);
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 100.0;
    double worst = 0.0;
    integrate_observed(u0, z, cfg, 10, [&](double, const State& u) {
        const auto j = oracle_actions(u, h.spec);
        for (std::size_t n = 0; n < j.size(); ++n) worst = std::max(worst, std::abs(j[n] - j0[n]));
    });
    return {worst <= 1e-8, "max |J_n(t) - J_n(0)| over T = 100: " + fmt("%.3g", worst) + " (tol 1e-8)"};
}

Outcome c8_divisors() {
    const Spectrum spec = circle(50);
    double c = std::numeric_limits<double>::infinity();
    bool positive = true;
    std::size_t flagged = 0;
    int scans = 0;
    for (int k = 1; k <= 3; ++k) {
        for (int ell = 0; ell <= k + 1; ++ell) {
            const ScanReport rep = divisor_bound_scan(spec, k, ell, k + 2.0);
            ++scans;
            if (rep.tuples == 0) continue;
            positive = positive && rep.min_weighted > 0.0;
            c = std::min(c, rep.min_weighted);
            for (const auto& r : rep.flagged) {
                std::vector<int> plus(r.clusters.begin(), r.clusters.begin() + r.ell);
                std::vector<int> minus(r.clusters.begin() + r.ell, r.clusters.end());
                std::sort(plus.begin(), plus.end());
                std::sort(minus.begin(), minus.end());
                if (plus != minus) ++flagged;
            }
        }
    }
    return {positive && flagged == 0, std::to_string(scans) + " (k, ell) scans, smallest empirical c = " +
                                          fmt("%.4g", c) + ", nonresonant tuples flagged: " + std::to_string(flagged)};
}

Outcome c9_algebra() {
    std::mt19937_64 rng(99);
    const std::vector<int> modes{0, 1, 2};
    double worst = 0.0;
    for (int t = 0; t < 30; ++t) {
        const HomPoly a = oracle::random_poly(rng, 2 + t % 3, modes, 8, t % 2 == 0);
        const HomPoly b = oracle::random_poly(rng, 3, modes, 8, t % 2 == 0);
        const HomPoly c = oracle::random_poly(rng, 2 + t % 2, modes, 8, t % 2 == 0);
        const HomPoly ab = poisson_bracket(a, b);
        worst = std::max(worst, oracle::rel_diff(ab, poisson_bracket(b, a) * cplx{-1.0}));

        const HomPoly j1 = poisson_bracket(a, poisson_bracket(b, c));
        const HomPoly j2 = poisson_bracket(b, poisson_bracket(c, a));
        const HomPoly j3 = poisson_bracket(c, poisson_bracket(a, b));
        const double js = std::max({j1.max_abs(), j2.max_abs(), j3.max_abs()});
        worst = std::max(worst, (j1 + j2 + j3).max_abs() / js);

        const HomPoly lhs = poisson_bracket(a, multiply(b, c));
        worst = std::max(worst, oracle::rel_diff(lhs, multiply(ab, c) + multiply(b, poisson_bracket(a, c))));

        const oracle::Dense dense = oracle::dense_bracket(oracle::Dense::from(a), oracle::Dense::from(b));
        worst = std::max(worst, oracle::dense_diff(oracle::Dense::from(ab), dense) / std::max(dense.max_abs(), 1e-300));

        if (t % 2 == 0 && !reality_check(ab)) worst = std::max(worst, 1.0);
    }
    return {worst <= 1e-12, "max relative defect over antisymmetry, Jacobi, Leibniz, dense oracle, reality: " +
                                fmt("%.3g", worst) + " (tol 1e-12)"};
}

Outcome c10_tameness() {
    const PolyHamiltonian h8 = kg(8, {{3, 1.0}}, 3);
    const PolyHamiltonian h16 = kg(16, {{3, 1.0}}, 3);
    const double c8 = class_norm(h8.parts.at(3), h8.spec, 1.0, 4).best_constant;
    const double c16 = class_norm(h16.parts.at(3), h16.spec, 1.0, 4).best_constant;
    const double growth = c16 / c8 - 1.0;
    return {c8 > 0.0 && growth <= 0.10, "class norm n_max 8: " + fmt("%.6g", c8) + ", n_max 16: " +
                                            fmt("%.6g", c16) + ", growth " + fmt("%.2f", 100.0 * growth) +
                                            "% (limit 10%)"};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "homological exactness", 5.0, c1_homological},
        {2, "normal-form commutation", 30.0, c2_commutation},
        {3, "second-order oracle", 5.0, c3_second_order},
        {4, "Lie-transform remainder order", 60.0, c4_remainder},
        {5, "near-identity transform", 60.0, c5_near_identity},
        {6, "drift scaling", 900.0, c6_drift},
        {7, "resonant-truncation conservation", 120.0, c7_resonant_flow},
        {8, "small-divisor positivity", 60.0, c8_divisors},
        {9, "algebra property suite", 10.0, c9_algebra},
        {10, "tameness witness", 30.0, c10_tameness},
    };
    int passed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_s;
        const bool ok = o.ok && in_time;
        passed += ok ? 1 : 0;
        std::printf("%s criterion %2d  %-34s %s; %.2f s (budget %.0f s)\n", ok ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.budget_s);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", passed, criteria.size());
    return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
