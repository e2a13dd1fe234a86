#pragma once

#include <vector>

#include "json.hpp"

#include "bnf/polyalg.hpp"
#include "bnf/spectrum.hpp"

namespace bnf {

/// Hard floor (times max omega) on divisors of nonresonant keys.
inline constexpr double kNearResonanceFloor = 1e-10;

/// Sum of omega over the u slots minus the sum over the ubar slots.
double key_divisor(const MonomialKey& key, const Spectrum& spec);

/// A key is resonant when the cluster multisets of its u and ubar slots coincide.
bool is_resonant(const MonomialKey& key, const Spectrum& spec);

struct SplitResult {
    HomPoly resonant;
    HomPoly nonresonant;
};

/// Pure partition of the keys; no arithmetic on coefficients.
SplitResult resonant_split(const HomPoly& p, const Spectrum& spec);

/// G2 = sum over modes of omega u ubar.
HomPoly g2_polynomial(const Spectrum& spec);
/// J_n = sum over the modes of cluster n of u ubar.
HomPoly action_polynomial(const Spectrum& spec, int cluster);

/// {P, G2}: every coefficient multiplied by -i * key_divisor.
HomPoly bracket_with_G2(const HomPoly& p, const Spectrum& spec);

struct HomologicalSolution {
    HomPoly F;
    HomPoly Z;
    double min_divisor = 0.0;  // over the nonresonant keys that were divided
    double max_divisor = 0.0;
};

/// Solves {F, G2} + Q = Z with Z the resonant part of Q and F supported on
/// the nonresonant keys only: F_key = Q_key / (i Omega_key).
/// Throws InvalidParameter if Q is not real valued and NearResonantMass if a
/// nonresonant divisor falls below kNearResonanceFloor * max omega.
HomologicalSolution solve_homological(const HomPoly& Q, const Spectrum& spec);

/// Degree components (3..max_degree) of sum_n (Ad F)^n (G2 + H) / n!, where
/// (Ad F) h = {F, h}. G2 is implicit and not returned. Requires deg F >= 3.
PolyFamily lie_transform(const PolyFamily& H, const HomPoly& F, int max_degree, const Spectrum& spec);

struct StepDiagnostics {
    int step = 0;
    int degree = 0;
    double min_divisor_used = 0.0;
    double max_divisor_used = 0.0;
    double residual = 0.0;       // |new part - Z|_inf / |Q|_inf
    double q_class_norm = 0.0;   // class_norm(Q, nu = 1, N = 4)
    double f_class_norm = 0.0;   // class_norm(F, nu = 1, N = 4)
    std::size_t generator_terms = 0;
    std::size_t z_terms = 0;
};

struct NormalFormResult {
    std::vector<double> g2;          // omega per cluster, index n - 1
    PolyFamily z_parts;              // degrees 3..r0+2, resonant
    std::vector<HomPoly> generators; // F^(1), ..., F^(r0); F^(j) has degree j + 2
    int dropped_degree = 0;          // r0 + 3
    std::vector<StepDiagnostics> diagnostics;
};

/// Normalizes one degree per step, r = 0..r0-1, pushing each generator
/// through all parts and discarding degrees above r0 + 2.
NormalFormResult birkhoff(const PolyFamily& H, const Spectrum& spec, int r0);

/// max over clusters a and keys of |coeff {J_a, Z}|.
double check_action_commutation(const HomPoly& Z, const Spectrum& spec);

nlohmann::json to_json(const NormalFormResult& nf);

}  // namespace bnf
