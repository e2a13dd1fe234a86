#include <algorithm>
#include <cmath>
#include <random>

#include "bnf/dynamics.hpp"
#include "bnf/errors.hpp"
#include "bnf/kgmodel.hpp"
#include "bnf/normalform.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bnf;
using oracle::rel_diff;

namespace {

const cplx I{0.0, 1.0};

Spectrum circle(int n_max, double m = 1.0) { return build_sphere_spectrum({1, m}, n_max); }

// mode id of Fourier index k on S^1
int fm(const Spectrum& spec, int k) { return spec.circle_mode(k); }

HomPoly monomial(std::vector<int> u, std::vector<int> ub, cplx c = 1.0) {
    HomPoly p(static_cast<int>(u.size() + ub.size()));
    p.add(MonomialKey(std::move(u), std::move(ub)), c);
    return p;
}

std::vector<int> all_modes(const Spectrum& spec) {
    std::vector<int> ids(spec.mode_count());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    return ids;
}

PolyHamiltonian kg(int n_max, std::map<int, double> coeffs, int max_degree) {
    Nonlinearity nl;
    nl.coefficients = std::move(coeffs);
    return taylor_hamiltonian(nl, circle(n_max), max_degree);
}

}  // namespace

TEST_CASE("resonant split examples") {
    const Spectrum spec = circle(6);
    const int a3 = spec.first_mode(3), a4 = spec.first_mode(4), a5 = spec.first_mode(5);
    CHECK(is_resonant(MonomialKey({a3, a5}, {a5, a3}), spec));
    CHECK_FALSE(is_resonant(MonomialKey({a3, a5}, {a5, a4}), spec));
    CHECK(is_resonant(MonomialKey({fm(spec, 3), fm(spec, 5)}, {fm(spec, -3), fm(spec, 5)}), spec));
    CHECK_FALSE(is_resonant(MonomialKey({a3, a3}, {a3}), spec));

    std::mt19937_64 rng(7);
    for (int deg : {3, 4, 5, 6}) {
        const HomPoly p = oracle::random_poly(rng, deg, all_modes(spec), 60, false);
        const SplitResult s = resonant_split(p, spec);
        HomPoly back = s.resonant;
        for (const auto& [k, c] : s.nonresonant.terms()) back.add(k, c);
        CHECK(back.terms() == p.terms());
        for (const auto& [k, c] : s.resonant.terms()) CHECK(is_resonant(k, spec));
        for (const auto& [k, c] : s.nonresonant.terms()) CHECK_FALSE(is_resonant(k, spec));
        if (deg % 2 == 1) CHECK(s.resonant.empty());
    }
}

TEST_CASE("bracket with G2") {
    const Spectrum spec = circle(6);
    const HomPoly g2 = g2_polynomial(spec);
    const auto m = [&](int n) { return spec.first_mode(n); };

    const HomPoly res = monomial({fm(spec, 3), fm(spec, 5)}, {fm(spec, -3), fm(spec, 5)}, {1.5, -0.5});
    const HomPoly zero = bracket_with_G2(res, spec);
    for (const auto& [k, c] : zero.terms()) CHECK(c == cplx{0.0});

    const HomPoly p = monomial({m(1), m(2)}, {m(3), m(4)});
    const double omega = std::sqrt(2.0) + std::sqrt(5.0) - std::sqrt(10.0) - std::sqrt(17.0);
    const cplx got = bracket_with_G2(p, spec).coeff(MonomialKey({m(1), m(2)}, {m(3), m(4)}));
    CHECK(std::abs(got - (-I * omega)) <= 1e-15);

    std::mt19937_64 rng(11);
    for (int t = 0; t < 20; ++t) {
        const HomPoly q = oracle::random_poly(rng, 3 + t % 4, all_modes(spec), 25, t % 2 == 0);
        CHECK(rel_diff(bracket_with_G2(q, spec), poisson_bracket(q, g2)) <= 1e-15);
    }
}

TEST_CASE("homological equation") {
    const Spectrum spec = circle(6);
    const auto m = [&](int n) { return spec.first_mode(n); };

    const HomologicalSolution zero = solve_homological(HomPoly(4), spec);
    CHECK(zero.F.empty());
    CHECK(zero.Z.empty());

    const HomPoly res = symmetrize_real(monomial({m(2), m(5)}, {m(5), m(2) + 1}, {0.3, 0.7}));
    const HomologicalSolution rs = solve_homological(res, spec);
    CHECK(rs.F.empty());
    CHECK(rs.Z.terms() == res.terms());

    const HomPoly q = symmetrize_real(monomial({m(1), m(2)}, {m(3), m(4)}, {0.4, -1.1}));
    const HomologicalSolution s = solve_homological(q, spec);
    const HomPoly residual = bracket_with_G2(s.F, spec) + q - s.Z;
    CHECK(residual.max_abs() <= 1e-12 * q.max_abs());
    CHECK(reality_check(s.F));
    CHECK(s.Z.empty());

    std::mt19937_64 rng(3);
    for (int t = 0; t < 30; ++t) {
        const HomPoly rq = oracle::random_poly(rng, 3 + t % 3, all_modes(spec), 40, true);
        const HomologicalSolution sol = solve_homological(rq, spec);
        CHECK((bracket_with_G2(sol.F, spec) + rq - sol.Z).max_abs() <= 1e-12 * rq.max_abs());
        CHECK((poisson_bracket(sol.F, g2_polynomial(spec)) + rq - sol.Z).max_abs() <= 1e-12 * rq.max_abs());
        CHECK(reality_check(sol.F));
        CHECK(reality_check(sol.Z));
    }

    CHECK_THROWS_AS(solve_homological(monomial({m(1), m(2)}, {m(3)}, I), spec), InvalidParameter);
}

TEST_CASE("near-resonant divisor is rejected") {
    // m = sqrt2: omega_1 + omega_1 + omega_1 = omega_5 on S^1 (3 sqrt3 vs sqrt27)
    const Spectrum spec = circle(5, std::sqrt(2.0));
    const int a1 = spec.first_mode(1), a5 = spec.first_mode(5);
    const HomPoly q = symmetrize_real(monomial({a1, a1, a1}, {a5}));
    CHECK(std::abs(key_divisor(MonomialKey({a1, a1, a1}, {a5}), spec)) < 1e-12);
    CHECK_THROWS_AS(solve_homological(q, spec), NearResonantMass);

    PolyFamily h;
    h.emplace(3, HomPoly(3));
    h.emplace(4, q);
    try {
        birkhoff(h, spec, 2);
        FAIL("expected NearResonantMass");
    } catch (const NearResonantMass& e) {
        CHECK(e.step() == 2);
    }
}

TEST_CASE("lie transform") {
    const Spectrum spec = circle(4);
    const PolyHamiltonian h = kg(4, {{3, 1.0}}, 5);

    const PolyFamily same = lie_transform(h.parts, HomPoly(3), 5, spec);
    REQUIRE(same.size() == h.parts.size());
    for (const auto& [deg, p] : h.parts) CHECK(same.at(deg).terms() == p.terms());

    CHECK_THROWS_AS(lie_transform(h.parts, HomPoly(2), 5, spec), InvalidParameter);

    // H = G2 only: the degree-3 output is {F, G2} = -nonresonant(Q)
    const HomPoly q = h.parts.at(3);
    const HomologicalSolution sol = solve_homological(q, spec);
    const PolyFamily out = lie_transform({}, sol.F, 5, spec);
    CHECK(rel_diff(out.at(3), resonant_split(q, spec).nonresonant * cplx{-1.0}) <= 1e-14);
}

TEST_CASE("lie transform agrees with the numeric flow") {
    const Spectrum spec = circle(4);
    const int max_degree = 5;
    const PolyHamiltonian h = kg(4, {{3, 1.0}, {4, 0.5}}, max_degree);
    const HomologicalSolution sol = solve_homological(h.parts.at(3), spec);
    const PolyFamily pulled = lie_transform(h.parts, sol.F, max_degree, spec);
    const HomPoly g2 = g2_polynomial(spec);

    std::mt19937_64 rng(5);
    State dir = oracle::random_state(rng, spec.mode_count(), 1.0);
    const double n0 = oracle::state_norm(dir);
    for (auto& z : dir) z /= n0;

    std::vector<double> amps{0.1, 0.05, 0.025}, errs;
    for (double a : amps) {
        State u = dir;
        for (auto& z : u) z *= a;
        const State phi = generator_flow(sol.F, u, 1.0, 1e-13);
        const double lhs = (evaluate(g2, u) + evaluate(pulled, u)).real();
        const double rhs = (evaluate(g2, phi) + evaluate(h.parts, phi)).real();
        errs.push_back(std::abs(lhs - rhs));
    }
    const PowerFit fit = fit_power_law(amps, errs);
    CHECK(fit.exponent == doctest::Approx(max_degree + 1).epsilon(0.1));
}

TEST_CASE("birkhoff examples") {
    const Spectrum spec = circle(4);

    SUBCASE("cubic only, r0 = 1") {
        const PolyHamiltonian h = kg(4, {{3, 1.0}}, 3);
        const NormalFormResult nf = birkhoff(h.parts, spec, 1);
        CHECK(nf.z_parts.at(3).empty());
        CHECK(nf.generators.size() == 1);
        CHECK(nf.dropped_degree == 4);
        CHECK(nf.diagnostics.at(0).residual == 0.0);
    }

    SUBCASE("H = 0") {
        const NormalFormResult nf = birkhoff({}, spec, 3);
        CHECK(nf.generators.size() == 3);
        for (const auto& f : nf.generators) CHECK(f.empty());
        for (const auto& [deg, z] : nf.z_parts) CHECK(z.empty());
        CHECK(nf.z_parts.size() == 3);
    }

    SUBCASE("second-order oracle") {
        const PolyHamiltonian h = kg(4, {{3, 1.0}, {4, 1.0}}, 4);
        const NormalFormResult nf = birkhoff(h.parts, spec, 2);
        const HomPoly& q3 = h.parts.at(3);
        const HomPoly& q4 = h.parts.at(4);
        const HomologicalSolution s3 = solve_homological(q3, spec);
        const HomPoly expect = resonant_split(q4 + poisson_bracket(s3.F, q3) * cplx{0.5}, spec).resonant;
        const HomPoly& z4 = nf.z_parts.at(4);
        CHECK_FALSE(z4.empty());
        CHECK(rel_diff(z4, expect) <= 1e-10);
        for (const auto& [k, c] : z4.terms()) CHECK(is_resonant(k, spec));
        CHECK(check_action_commutation(z4, spec) == 0.0);
        for (const auto& f : nf.generators) CHECK(reality_check(f));
        for (const auto& [deg, z] : nf.z_parts) CHECK(reality_check(z));
        CHECK(nf.z_parts.at(3).empty());
    }

    CHECK_THROWS_AS(birkhoff({}, spec, 0), InvalidParameter);
    PolyFamily complex_part;
    complex_part.emplace(3, monomial({0, 1}, {2}, I));
    CHECK_THROWS_AS(birkhoff(complex_part, spec, 1), InvalidParameter);
}

TEST_CASE("action commutation") {
    const Spectrum spec = circle(5);
    const auto m = [&](int n) { return spec.first_mode(n); };
    const HomPoly nonres = monomial({m(1), m(2)}, {m(3), m(4)});
    CHECK(check_action_commutation(nonres, spec) > 0.0);
    for (int a = 1; a <= 4; ++a) {
        CHECK(poisson_bracket(action_polynomial(spec, a), nonres).max_abs() > 0.0);
    }
    const HomPoly j1 = action_polynomial(spec, 1);
    CHECK(check_action_commutation(multiply(j1, j1), spec) == 0.0);

    std::mt19937_64 rng(19);
    for (int t = 0; t < 10; ++t) {
        const HomPoly p = oracle::random_poly(rng, 4 + 2 * (t % 2), all_modes(spec), 200, false);
        CHECK(check_action_commutation(resonant_split(p, spec).resonant, spec) == 0.0);
    }
}

TEST_CASE("birkhoff is independent of insertion order") {
    const Spectrum spec = circle(5);
    const PolyHamiltonian h = kg(5, {{3, 1.0}, {4, -0.7}}, 4);
    PolyFamily shuffled;
    std::mt19937_64 rng(23);
    for (const auto& [deg, p] : h.parts) {
        std::vector<std::pair<MonomialKey, cplx>> terms(p.terms().begin(), p.terms().end());
        std::shuffle(terms.begin(), terms.end(), rng);
        HomPoly q(deg);
        for (const auto& [k, c] : terms) q.add(k, c);
        shuffled.emplace(deg, std::move(q));
    }
    const NormalFormResult a = birkhoff(h.parts, spec, 2);
    const NormalFormResult b = birkhoff(shuffled, spec, 2);
    CHECK(rel_diff(a.z_parts.at(4), b.z_parts.at(4)) == 0.0);
    CHECK(to_json(a).dump() == to_json(b).dump());
}
