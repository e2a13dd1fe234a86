#pragma once

#include <complex>
#include <compare>
#include <cstddef>
#include <map>
#include <vector>

#include "json.hpp"

#include "bnf/spectrum.hpp"
#include "bnf/weights.hpp"

namespace bnf {

using cplx = std::complex<double>;

/// Complex amplitude per mode id (the coordinates u; u-bar is the pointwise
/// conjugate and is never stored).
using State = std::vector<cplx>;

/// Monomial prod_{a in u} u_a * prod_{b in ubar} conj(u_b), stored as two
/// sorted multisets of mode ids.
struct MonomialKey {
    std::vector<int> u;
    std::vector<int> ubar;

    MonomialKey() = default;
    /// Sorts both multisets.
    MonomialKey(std::vector<int> u_modes, std::vector<int> ubar_modes);

    int degree() const { return static_cast<int>(u.size() + ubar.size()); }
    int bidegree() const { return static_cast<int>(u.size()); }
    /// Key with the u and ubar multisets exchanged.
    MonomialKey conjugate() const { return MonomialKey{ubar, u, Sorted{}}; }

    auto operator<=>(const MonomialKey&) const = default;
    bool operator==(const MonomialKey&) const = default;

private:
    struct Sorted {};
    MonomialKey(std::vector<int> u_sorted, std::vector<int> ubar_sorted, Sorted)
        : u(std::move(u_sorted)), ubar(std::move(ubar_sorted)) {}
};

/// Degree-homogeneous sparse polynomial in (u, u-bar). Repeated modes are
/// stored once per multiset pair, so combinatorial multiplicities live in the
/// coefficient and evaluate() is a plain sum of coefficient * monomial.
class HomPoly {
public:
    using TermMap = std::map<MonomialKey, cplx>;

    explicit HomPoly(int degree = 0) : degree_(degree) {}

    int degree() const { return degree_; }
    const TermMap& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    /// Adds c to the coefficient of key; drops the entry if it becomes exactly zero.
    /// Throws InvalidParameter when the key degree differs from degree().
    void add(const MonomialKey& key, cplx c);
    void add(MonomialKey&& key, cplx c);
    cplx coeff(const MonomialKey& key) const;

    double max_abs() const;
    /// Removes entries with |c| <= abs_tol.
    void prune(double abs_tol);

    HomPoly& operator+=(const HomPoly& other);
    HomPoly& operator-=(const HomPoly& other);
    HomPoly& operator*=(cplx s);

    friend HomPoly operator+(HomPoly a, const HomPoly& b) { return a += b; }
    friend HomPoly operator-(HomPoly a, const HomPoly& b) { return a -= b; }
    friend HomPoly operator*(HomPoly a, cplx s) { return a *= s; }
    friend HomPoly operator*(cplx s, HomPoly a) { return a *= s; }
    friend bool operator==(const HomPoly&, const HomPoly&) = default;

private:
    int degree_;
    TermMap terms_;
};

/// Homogeneous parts keyed by degree.
using PolyFamily = std::map<int, HomPoly>;

/// Pointwise product; keys are concatenated multisets.
HomPoly multiply(const HomPoly& a, const HomPoly& b);

/// {F1, F2} = i (d_u F2)(grad_ubar F1) - i (d_ubar F2)(grad_u F1).
/// With this convention {P, G2} = -i Omega P for a monomial P with divisor
/// Omega, and d/dt F(u(t)) = {G, F} along u' = i grad_ubar G.
HomPoly poisson_bracket(const HomPoly& f1, const HomPoly& f2);

enum class Slot { U, UBar };

/// Formal partial derivative with respect to u_mode or conj(u_mode).
HomPoly gradient(const HomPoly& p, Slot which, int mode);

/// Evaluates P with conjugates substituted in the ubar slots.
cplx evaluate(const HomPoly& p, const State& state);
cplx evaluate(const PolyFamily& parts, const State& state);

/// X_P(u) = i grad_ubar P(u), same length as state.
State vector_field(const HomPoly& p, const State& state);

/// True iff coeff(A|B) == conj(coeff(B|A)) for every key, up to
/// rel_tol * max |coeff|. rel_tol = 0 demands bit equality.
bool reality_check(const HomPoly& p, double rel_tol = 1e-12);
/// Largest |coeff(A|B) - conj(coeff(B|A))| over the keys.
double reality_defect(const HomPoly& p);
/// Projection onto real-valued polynomials.
HomPoly symmetrize_real(const HomPoly& p);

/// Cluster tuple of a key: u slots first, then ubar slots.
std::vector<int> cluster_tuple(const MonomialKey& key, const Spectrum& spec);

struct WeightReport {
    double nu = 0.0;
    int N = 0;
    double best_constant = 0.0;
    MonomialKey argmax_key;
};

/// max over keys of |coeff| * S^N / mu^(nu + N) on the key's cluster tuple.
WeightReport class_norm(const HomPoly& p, const Spectrum& spec, double nu, int N);

/// Precompiled evaluator for a sum of homogeneous polynomials; used on the
/// hot path of time integration.
class CompiledPoly {
public:
    CompiledPoly() = default;
    explicit CompiledPoly(const PolyFamily& parts);
    explicit CompiledPoly(const HomPoly& p);

    bool empty() const { return value_terms_.empty(); }
    cplx value(const State& state) const;
    /// out = i grad_ubar P(state); out is resized to state.size().
    void field(const State& state, State& out) const;

private:
    struct Term {
        cplx coeff;
        int target = -1;  // ubar mode differentiated (field terms only)
        std::vector<int> u;
        std::vector<int> ubar;
    };
    void add_part(const HomPoly& p);

    std::vector<Term> value_terms_;
    std::vector<Term> field_terms_;
};

nlohmann::json to_json(const HomPoly& p);
/// Throws InvalidParameter on schema violations.
HomPoly hompoly_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PolyFamily& parts);
/// Accepts either {"parts": [poly, ...]} or a single polynomial document.
PolyFamily family_from_json(const nlohmann::json& j);

}  // namespace bnf
