#include "bnf/normalform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "bnf/errors.hpp"

namespace bnf {

namespace {

std::string describe_key(const MonomialKey& key, const Spectrum& spec) {
    std::ostringstream os;
    os << "u-clusters (";
    for (std::size_t i = 0; i < key.u.size(); ++i) os << (i ? "," : "") << spec.cluster_of(key.u[i]);
    os << ") ubar-clusters (";
    for (std::size_t i = 0; i < key.ubar.size(); ++i) os << (i ? "," : "") << spec.cluster_of(key.ubar[i]);
    os << ")";
    return os.str();
}

}  // namespace

double key_divisor(const MonomialKey& key, const Spectrum& spec) {
    double plus = 0.0;
    double minus = 0.0;
    for (int a : key.u) plus += spec.omega_of_mode(a);
    for (int b : key.ubar) minus += spec.omega_of_mode(b);
    return plus - minus;
}

bool is_resonant(const MonomialKey& key, const Spectrum& spec) {
    if (key.u.size() != key.ubar.size()) return false;
    std::vector<int> a, b;
    a.reserve(key.u.size());
    b.reserve(key.ubar.size());
    for (int m : key.u) a.push_back(spec.cluster_of(m));
    for (int m : key.ubar) b.push_back(spec.cluster_of(m));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
}

SplitResult resonant_split(const HomPoly& p, const Spectrum& spec) {
    SplitResult out{HomPoly(p.degree()), HomPoly(p.degree())};
    for (const auto& [key, c] : p.terms()) {
        (is_resonant(key, spec) ? out.resonant : out.nonresonant).add(key, c);
    }
    return out;
}

HomPoly g2_polynomial(const Spectrum& spec) {
    HomPoly g2(2);
    for (const Mode& mode : spec.modes()) g2.add(MonomialKey({mode.id}, {mode.id}), spec.omega(mode.cluster));
    return g2;
}

HomPoly action_polynomial(const Spectrum& spec, int cluster) {
    HomPoly j(2);
    const int first = spec.first_mode(cluster);
    for (int id = first; id < first + spec.multiplicity(cluster); ++id) j.add(MonomialKey({id}, {id}), 1.0);
    return j;
}

HomPoly bracket_with_G2(const HomPoly& p, const Spectrum& spec) {
    HomPoly out(p.degree());
    for (const auto& [key, c] : p.terms()) {
        const double omega = key_divisor(key, spec);
        // c * (-i omega), written out so conjugate keys stay exactly conjugate
        out.add(key, cplx{c.imag() * omega, -c.real() * omega});
    }
    return out;
}

HomologicalSolution solve_homological(const HomPoly& Q, const Spectrum& spec) {
    if (!reality_check(Q, 1e-12)) {
        throw InvalidParameter("solve_homological: Q is not real valued (defect " +
                               std::to_string(reality_defect(Q)) + ")");
    }
    HomologicalSolution sol{HomPoly(Q.degree()), HomPoly(Q.degree()), 0.0, 0.0};
    const double floor = kNearResonanceFloor * spec.max_omega();
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& [key, c] : Q.terms()) {
        if (is_resonant(key, spec)) {
            sol.Z.add(key, c);
            continue;
        }
        const double omega = key_divisor(key, spec);
        if (std::abs(omega) < floor) {
            throw NearResonantMass("near-resonant mass: nonresonant key with " + describe_key(key, spec) +
                                   " has divisor " + std::to_string(omega));
        }
        lo = std::min(lo, std::abs(omega));
        hi = std::max(hi, std::abs(omega));
        // c / (i omega)
        sol.F.add(key, cplx{c.imag() / omega, -c.real() / omega});
    }
    sol.min_divisor = std::isfinite(lo) ? lo : 0.0;
    sol.max_divisor = hi;
    return sol;
}

PolyFamily lie_transform(const PolyFamily& H, const HomPoly& F, int max_degree, const Spectrum& spec) {
    if (F.degree() <= 2) {
        throw InvalidParameter("lie_transform: generator degree must be >= 3, got " + std::to_string(F.degree()));
    }
    PolyFamily result;
    for (const auto& [deg, h] : H) {
        if (deg < 3) throw InvalidParameter("lie_transform: H parts must have degree >= 3");
        if (deg <= max_degree) result.emplace(deg, h);
    }
    if (F.empty()) return result;

    const int shift = F.degree() - 2;
    // n = 1 term: {F, G2} + sum_j {F, H_j}
    PolyFamily term;
    if (F.degree() <= max_degree) term.emplace(F.degree(), bracket_with_G2(F, spec));
    for (const auto& [deg, h] : result) {
        if (deg + shift > max_degree || h.empty()) continue;
        auto [it, inserted] = term.try_emplace(deg + shift, deg + shift);
        it->second += poisson_bracket(F, h);
    }
    for (int n = 2; !term.empty(); ++n) {
        for (const auto& [deg, t] : term) {
            auto [it, inserted] = result.try_emplace(deg, deg);
            it->second += t;
        }
        PolyFamily next;
        for (const auto& [deg, t] : term) {
            if (deg + shift > max_degree || t.empty()) continue;
            auto [it, inserted] = next.try_emplace(deg + shift, deg + shift);
            it->second += poisson_bracket(F, t) * cplx{1.0 / n};
        }
        std::erase_if(next, [](const auto& kv) { return kv.second.empty(); });
        term = std::move(next);
    }
    return result;
}

NormalFormResult birkhoff(const PolyFamily& H, const Spectrum& spec, int r0) {
    if (r0 < 1) throw InvalidParameter("birkhoff: r0 must be >= 1");
    const int top = r0 + 2;
    PolyFamily parts;
    for (int deg = 3; deg <= top; ++deg) parts.emplace(deg, deg);
    for (const auto& [deg, h] : H) {
        if (deg < 3) throw InvalidParameter("birkhoff: Hamiltonian parts must have degree >= 3");
        if (h.degree() != deg) throw InvalidParameter("birkhoff: part stored under the wrong degree");
        if (!reality_check(h, 1e-12)) {
            throw InvalidParameter("birkhoff: degree-" + std::to_string(deg) + " part is not real valued");
        }
        if (deg <= top) parts.at(deg) = h;
    }

    NormalFormResult nf;
    for (int n = 1; n <= spec.n_max(); ++n) nf.g2.push_back(spec.omega(n));
    nf.dropped_degree = top + 1;

    for (int r = 0; r < r0; ++r) {
        const int deg = r + 3;
        const HomPoly Q = parts.at(deg);
        HomologicalSolution sol;
        try {
            sol = solve_homological(Q, spec);
        } catch (const NearResonantMass& e) {
            throw NearResonantMass(std::string(e.what()) + " at step " + std::to_string(r + 1), r + 1);
        }
        PolyFamily next = lie_transform(parts, sol.F, top, spec);
        for (const auto& [d, p] : next) {
            if (d > top) throw NumericError("birkhoff: degree bound violated after truncation");
        }

        StepDiagnostics diag;
        diag.step = r + 1;
        diag.degree = deg;
        diag.min_divisor_used = sol.min_divisor;
        diag.max_divisor_used = sol.max_divisor;
        const double qn = Q.max_abs();
        diag.residual = qn > 0.0 ? (next.at(deg) - sol.Z).max_abs() / qn : 0.0;
        diag.q_class_norm = class_norm(Q, spec, 1.0, 4).best_constant;
        diag.f_class_norm = class_norm(sol.F, spec, 1.0, 4).best_constant;
        diag.generator_terms = sol.F.size();
        diag.z_terms = sol.Z.size();
        nf.diagnostics.push_back(diag);

        next.at(deg) = sol.Z;
        for (int d = 3; d <= top; ++d) next.try_emplace(d, d);
        parts = std::move(next);
        nf.generators.push_back(std::move(sol.F));
    }
    nf.z_parts = std::move(parts);
    return nf;
}

double check_action_commutation(const HomPoly& Z, const Spectrum& spec) {
    double worst = 0.0;
    for (int n = 1; n <= spec.n_max(); ++n) {
        worst = std::max(worst, poisson_bracket(action_polynomial(spec, n), Z).max_abs());
    }
    return worst;
}

nlohmann::json to_json(const NormalFormResult& nf) {
    nlohmann::json z = nlohmann::json::array();
    for (const auto& [deg, p] : nf.z_parts) z.push_back(to_json(p));
    nlohmann::json gens = nlohmann::json::array();
    for (const auto& f : nf.generators) gens.push_back(to_json(f));
    nlohmann::json diags = nlohmann::json::array();
    for (const auto& d : nf.diagnostics) {
        diags.push_back({{"step", d.step},
                         {"degree", d.degree},
                         {"min_divisor_used", d.min_divisor_used},
                         {"max_divisor_used", d.max_divisor_used},
                         {"residual", d.residual},
                         {"q_class_norm", d.q_class_norm},
                         {"f_class_norm", d.f_class_norm},
                         {"generator_terms", d.generator_terms},
                         {"z_terms", d.z_terms}});
    }
    return {{"g2", nf.g2},
            {"z_parts", std::move(z)},
            {"generators", std::move(gens)},
            {"dropped_degree", nf.dropped_degree},
            {"diagnostics", std::move(diags)}};
}

}  // namespace bnf
