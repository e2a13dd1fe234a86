#include "bnf/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "bnf/dynamics.hpp"
#include "bnf/normalform.hpp"

namespace bnf {

namespace {

HomPoly random_real_poly(std::mt19937_64& rng, int degree, int n_modes, int n_terms) {
    std::uniform_int_distribution<int> pick(0, n_modes - 1);
    std::uniform_int_distribution<int> bideg(0, degree);
    std::normal_distribution<double> g;
    HomPoly p(degree);
    for (int t = 0; t < n_terms; ++t) {
        const int ell = bideg(rng);
        std::vector<int> u, ub;
        for (int i = 0; i < ell; ++i) u.push_back(pick(rng));
        for (int i = ell; i < degree; ++i) ub.push_back(pick(rng));
        p.add(MonomialKey(u, ub), cplx{g(rng), g(rng)});
    }
    return symmetrize_real(p);
}

double rel(const HomPoly& diff, double scale) { return scale > 0.0 ? diff.max_abs() / scale : diff.max_abs(); }

CheckResult at_most(std::string name, double value, double threshold, std::string detail = {}) {
    return {std::move(name), value <= threshold, value, threshold, std::move(detail)};
}

CheckResult bracket_algebra(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
        const HomPoly a = random_real_poly(rng, 3, 3, 6);
        const HomPoly b = random_real_poly(rng, 3, 3, 6);
        const HomPoly c = random_real_poly(rng, 4, 3, 6);
        const HomPoly ab = poisson_bracket(a, b);
        worst = std::max(worst, rel(ab + poisson_bracket(b, a), ab.max_abs()));
        const HomPoly j1 = poisson_bracket(a, poisson_bracket(b, c));
        const HomPoly j2 = poisson_bracket(b, poisson_bracket(c, a));
        const HomPoly j3 = poisson_bracket(c, poisson_bracket(a, b));
        worst = std::max(worst, rel(j1 + j2 + j3, std::max({j1.max_abs(), j2.max_abs(), j3.max_abs()})));
        const HomPoly lhs = poisson_bracket(a, multiply(b, c));
        const HomPoly rhs = multiply(poisson_bracket(a, b), c) + multiply(b, poisson_bracket(a, c));
        worst = std::max(worst, rel(lhs - rhs, lhs.max_abs()));
        if (!reality_check(ab)) worst = std::max(worst, 1.0);
    }
    return at_most("bracket algebra (antisymmetry, Jacobi, Leibniz, reality)", worst, 1e-12);
}

CheckResult homological(const Spectrum& spec, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int n_modes = spec.first_mode(std::min(spec.n_max(), 6)) + spec.multiplicity(std::min(spec.n_max(), 6));
    double worst = 0.0;
    bool real = true;
    for (int t = 0; t < 50; ++t) {
        const HomPoly q = random_real_poly(rng, 3 + t % 3, n_modes, 20);
        const HomologicalSolution sol = solve_homological(q, spec);
        worst = std::max(worst, rel(bracket_with_G2(sol.F, spec) + q - sol.Z, q.max_abs()));
        real = real && reality_check(sol.F) && reality_check(sol.Z);
    }
    CheckResult r = at_most("homological equation residual", worst, 1e-12);
    if (!real) {
        r.passed = false;
        r.detail = "generator or resonant part not real";
    }
    return r;
}

std::vector<CheckResult> normal_form_checks(const PolyHamiltonian& h, const NormalFormResult& nf) {
    std::vector<CheckResult> out;
    double comm = 0.0;
    bool odd_empty = true;
    bool real = true;
    for (const auto& [deg, z] : nf.z_parts) {
        comm = std::max(comm, check_action_commutation(z, h.spec));
        if (deg % 2 == 1 && !z.empty()) odd_empty = false;
        real = real && reality_check(z);
    }
    for (const auto& f : nf.generators) real = real && reality_check(f);
    out.push_back(at_most("normal form commutes with every action", comm, 0.0));
    out.push_back({"odd-degree normal form parts vanish", odd_empty, odd_empty ? 0.0 : 1.0, 0.0, {}});
    out.push_back({"normal form and generators are real", real, real ? 0.0 : 1.0, 0.0, {}});
    double residual = 0.0;
    for (const auto& d : nf.diagnostics) residual = std::max(residual, d.residual);
    out.push_back(at_most("Birkhoff step residuals", residual, 1e-12));
    return out;
}

CheckResult linear_flow_check(const Spectrum& spec, std::uint64_t seed) {
    const State u = random_unit_state(spec, 0.0, seed);
    const auto j0 = actions(u, spec);
    double worst = 0.0;
    for (double t : {0.7, 13.0, 250.0}) {
        const auto j = actions(linear_flow(u, t, spec), spec);
        for (std::size_t n = 0; n < j.size(); ++n) worst = std::max(worst, std::abs(j[n] - j0[n]));
    }
    return at_most("linear flow preserves actions", worst, 1e-14);
}

CheckResult taylor_quadrature(const RunConfig& cfg, const PolyHamiltonian& h) {
    const Spectrum& spec = h.spec;
    const int points = 8 * spec.n_max() * std::max(cfg.nonlinearity.highest_power(), 2) + 8;
    double worst = 0.0;
    for (int t = 0; t < 4; ++t) {
        State u = random_unit_state(spec, 0.0, cfg.seed + static_cast<std::uint64_t>(t));
        for (auto& z : u) z *= 0.1;
        const RealState rs = from_complex(u, spec);
        double quad = 0.0;
        for (int i = 0; i < points; ++i) {
            const double x = 2.0 * std::numbers::pi * i / points;
            quad += cfg.nonlinearity.value(x, circle_field(rs.v, spec, x));
        }
        quad *= 2.0 * std::numbers::pi / points;
        const double poly = evaluate(h.parts, u).real();
        worst = std::max(worst, std::abs(poly - quad) / std::max(std::abs(quad), 1e-300));
    }
    return at_most("Taylor Hamiltonian matches grid quadrature", worst, 1e-8);
}

}  // namespace

std::vector<CheckResult> run_verify(const RunConfig& cfg) {
    std::vector<CheckResult> out;
    const Spectrum spec = build_spectrum(cfg);
    const int top = std::max(cfg.nonlinearity.highest_power(), cfg.r0 + 2);
    const PolyHamiltonian h = build_hamiltonian(cfg, top);

    out.push_back(bracket_algebra(cfg.seed));
    out.push_back(homological(spec, cfg.seed));

    const NormalFormResult nf = birkhoff(h.parts, spec, cfg.r0);
    for (auto& c : normal_form_checks(h, nf)) out.push_back(std::move(c));

    out.push_back(linear_flow_check(spec, cfg.seed));

    const NearIdentityFit fit = near_identity_check(nf.generators, {0.1, 0.05, 0.025}, spec, 4, cfg.seed);
    const bool nonzero = std::any_of(nf.generators.begin(), nf.generators.end(), [](const HomPoly& f) { return !f.empty(); });
    {
        const double e = std::min(fit.forward.exponent, fit.inverse.exponent);
        const double e_hi = std::max(fit.forward.exponent, fit.inverse.exponent);
        const bool ok = !nonzero || (!fit.forward.degenerate && !fit.inverse.degenerate && e >= 1.8 && e_hi <= 2.2);
        out.push_back({"transform is quadratically close to the identity", ok, e, 1.8,
                       nonzero ? "exponent range [1.8, 2.2]" : "trivial transform"});
    }

    {
        const PolyHamiltonian z{spec, nf.z_parts};
        State u0 = random_unit_state(spec, cfg.s, cfg.seed);
        for (auto& c : u0) c *= cfg.amplitude;
        IntegratorConfig ic = cfg.integrator;
        ic.t_end = std::min(cfg.integrator.t_end, 10.0);
        const int every = std::max(1, static_cast<int>(std::lround(1.0 / (cfg.samples_per_unit_time * ic.dt))));
        const Trajectory tr = integrate(u0, z, ic, every, cfg.s);
        double worst = 0.0;
        for (const auto& j : tr.actions)
            for (std::size_t n = 0; n < j.size(); ++n) worst = std::max(worst, std::abs(j[n] - tr.actions[0][n]));
        out.push_back(at_most("truncated normal form flow conserves actions", worst, 1e-8));
    }

    {
        const int k_max = std::min(cfg.scan_k, 3);
        double c = std::numeric_limits<double>::infinity();
        long long flagged = 0;
        for (int k = 1; k <= k_max; ++k) {
            for (int ell = 0; ell <= k + 1; ++ell) {
                const ScanReport rep = divisor_bound_scan(spec, k, ell, cfg.nu_bar_for(k));
                if (rep.tuples > 0) c = std::min(c, rep.min_weighted);
                flagged += static_cast<long long>(rep.flagged.size());
            }
        }
        out.push_back({"small divisors bounded away from zero", c > 0.0 && flagged == 0, c, 0.0,
                       std::to_string(flagged) + " tuples flagged numerically resonant"});
    }

    if (cfg.d == 1) out.push_back(taylor_quadrature(cfg, h));
    return out;
}

nlohmann::json to_json(const std::vector<CheckResult>& checks) {
    nlohmann::json arr = nlohmann::json::array();
    bool all = true;
    for (const auto& c : checks) {
        all = all && c.passed;
        arr.push_back({{"name", c.name},
                       {"passed", c.passed},
                       {"value", c.value},
                       {"threshold", c.threshold},
                       {"detail", c.detail}});
    }
    return {{"checks", arr}, {"all_passed", all}};
}

}  // namespace bnf
