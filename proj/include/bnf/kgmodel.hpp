#pragma once

#include <map>
#include <vector>

#include "json.hpp"

#include "bnf/polyalg.hpp"
#include "bnf/spectrum.hpp"

namespace bnf {

/// f(x, v) = sum_p a_p(x) v^p with a_p(x) = a_p + sum_j c_{p,j} e^{i j x}.
/// The x-modulation must be conjugate symmetric (c_{p,-j} = conj c_{p,j}).
struct Nonlinearity {
    struct Modulation {
        int index = 0;
        cplx value;
    };
    std::map<int, double> coefficients;
    std::map<int, std::vector<Modulation>> modulation;

    /// Throws InvalidParameter if empty, if some p < 3, or if the modulation
    /// is not conjugate symmetric.
    void validate() const;
    int lowest_power() const;
    int highest_power() const;
    /// Pointwise value of f at (x, v); S^1 only.
    double value(double x, double v) const;
};

/// Product integrals int_M e_{m_1} ... e_{m_p} dx of a real orthonormal
/// eigenbasis, keyed by sorted mode multiset. Required for S^d with d >= 2.
///
/// JSON schema: {"tables": [{"degree": p, "entries": [{"modes": [...], "value": x}, ...]}, ...]}
struct CouplingTable {
    std::map<int, std::map<std::vector<int>, double>> by_degree;

    static CouplingTable from_json(const nlohmann::json& j);
};

/// G = G2 + sum of parts, with G2 = sum omega u ubar implicit in spec.
struct PolyHamiltonian {
    Spectrum spec;
    PolyFamily parts;
};

/// Real data (v, dv/dt) in a real orthonormal-up-to-scale basis indexed by
/// mode id. On S^1 the +n mode carries the cos(n x) coefficient and the -n
/// mode the sin(n x) coefficient; elsewhere coefficients of the real
/// orthonormal eigenfunctions.
struct RealState {
    std::vector<double> v;
    std::vector<double> v_t;
};

/// u = (p + i q)/sqrt2 with p = Lambda^{-1/2} v_t and q = Lambda^{1/2} v.
State to_complex(const RealState& rs, const Spectrum& spec);
RealState from_complex(const State& state, const Spectrum& spec);

/// Real function v(x) on S^1 evaluated at x.
double circle_field(const std::vector<double>& coeffs, const Spectrum& spec, double x);

/// Degree 3..max_degree Taylor parts of int_M f(x, Lambda^{-1/2} q) dx.
/// Throws UnsupportedManifold for d != 1 without a coupling table.
PolyHamiltonian taylor_hamiltonian(const Nonlinearity& nl, const Spectrum& spec, int max_degree,
                                   const CouplingTable* table = nullptr);

/// J_n = sum over modes of cluster n of |u|^2; index n - 1.
std::vector<double> actions(const State& state, const Spectrum& spec);

/// sum_n n^{2s} J_n.
double weighted_energy(const State& state, double s, const Spectrum& spec);
/// sqrt(weighted_energy).
double sobolev_norm(const State& state, double s, const Spectrum& spec);

/// G2(u) + sum of parts evaluated at u (real part).
double hamiltonian_value(const PolyHamiltonian& h, const State& state);

}  // namespace bnf
