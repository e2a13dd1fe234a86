#include "bnf/kgmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <unordered_map>

#include "bnf/errors.hpp"

namespace bnf {

namespace {

constexpr double kPi = std::numbers::pi;

// Calls fn on every sorted multiset of the given size drawn from [0, n).
template <typename Fn>
void for_each_multiset(int size, int n, Fn&& fn) {
    std::vector<int> buf(static_cast<std::size_t>(size), 0);
    if (size == 0) {
        fn(buf);
        return;
    }
    if (n == 0) return;
    while (true) {
        fn(buf);
        int pos = size - 1;
        while (pos >= 0 && buf[static_cast<std::size_t>(pos)] == n - 1) --pos;
        if (pos < 0) return;
        const int v = buf[static_cast<std::size_t>(pos)] + 1;
        for (int i = pos; i < size; ++i) buf[static_cast<std::size_t>(i)] = v;
    }
}

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

// prod over distinct entries of (multiplicity)!
double multiset_symmetry(const std::vector<int>& sorted) {
    double r = 1.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        r *= factorial(static_cast<int>(j - i));
        i = j;
    }
    return r;
}

// (i sqrt2)^{-p} (-1)^{nb} p! / (sym(A) sym(B)) prod omega^{-1/2}
cplx expansion_factor(const std::vector<int>& a, const std::vector<int>& b, int p, const Spectrum& spec) {
    double mag = factorial(p) / (multiset_symmetry(a) * multiset_symmetry(b)) * std::pow(2.0, -0.5 * p);
    for (int m : a) mag /= std::sqrt(spec.omega_of_mode(m));
    for (int m : b) mag /= std::sqrt(spec.omega_of_mode(m));
    if (b.size() % 2 == 1) mag = -mag;
    // i^{-p}
    static const cplx kIPow[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
    return mag * kIPow[p % 4];
}

int fourier_sum(const std::vector<int>& modes, const Spectrum& spec) {
    int s = 0;
    for (int m : modes) s += spec.fourier_index(m);
    return s;
}

HomPoly circle_part(const Nonlinearity& nl, int p, const Spectrum& spec) {
    // amplitude of e^{i j x} in a_p(x)
    std::map<int, cplx> amp;
    if (auto it = nl.coefficients.find(p); it != nl.coefficients.end()) amp[0] += it->second;
    if (auto it = nl.modulation.find(p); it != nl.modulation.end()) {
        for (const auto& mod : it->second) amp[mod.index] += mod.value;
    }
    const double norm = std::pow(2.0 * kPi, 1.0 - 0.5 * p);
    const int n_modes = static_cast<int>(spec.mode_count());

    HomPoly part(p);
    for (int ell = 0; ell <= p; ++ell) {
        std::unordered_map<int, std::vector<std::vector<int>>> b_by_sum;
        for_each_multiset(p - ell, n_modes, [&](const std::vector<int>& b) {
            b_by_sum[fourier_sum(b, spec)].push_back(b);
        });
        for_each_multiset(ell, n_modes, [&](const std::vector<int>& a) {
            const int sa = fourier_sum(a, spec);
            for (const auto& [j, c] : amp) {
                if (c == cplx{}) continue;
                // sum_A k - sum_B k + j = 0
                auto bucket = b_by_sum.find(sa + j);
                if (bucket == b_by_sum.end()) continue;
                for (const auto& b : bucket->second) {
                    part.add(MonomialKey(a, b), c * norm * expansion_factor(a, b, p, spec));
                }
            }
        });
    }
    return part;
}

HomPoly table_part(const Nonlinearity& nl, int p, const Spectrum& spec, const CouplingTable& table) {
    HomPoly part(p);
    auto coeff_it = nl.coefficients.find(p);
    if (coeff_it == nl.coefficients.end() || coeff_it->second == 0.0) return part;
    if (nl.modulation.count(p)) {
        throw UnsupportedManifold("taylor_hamiltonian: x-modulation is only supported on S^1");
    }
    auto tab = table.by_degree.find(p);
    if (tab == table.by_degree.end()) {
        throw InvalidParameter("taylor_hamiltonian: coupling table lacks degree " + std::to_string(p));
    }
    for (const auto& [modes, value] : tab->second) {
        for (int m : modes) (void)spec.cluster_of(m);
        // every split of the multiset into u slots and ubar slots
        const std::size_t n = modes.size();
        std::vector<std::vector<int>> seen_a;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            std::vector<int> a, b;
            for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? a : b).push_back(modes[i]);
            if (std::find(seen_a.begin(), seen_a.end(), a) != seen_a.end()) continue;
            seen_a.push_back(a);
            part.add(MonomialKey(a, b), coeff_it->second * value * expansion_factor(a, b, p, spec));
        }
    }
    return part;
}

}  // namespace

void Nonlinearity::validate() const {
    if (coefficients.empty() && modulation.empty()) throw InvalidParameter("nonlinearity: no terms");
    for (const auto& [p, a] : coefficients) {
        if (p < 3) throw InvalidParameter("nonlinearity: powers must be >= 3, got " + std::to_string(p));
        if (!std::isfinite(a)) throw InvalidParameter("nonlinearity: non-finite coefficient");
    }
    for (const auto& [p, mods] : modulation) {
        if (p < 3) throw InvalidParameter("nonlinearity: powers must be >= 3, got " + std::to_string(p));
        std::map<int, cplx> sum;
        for (const auto& m : mods) sum[m.index] += m.value;
        for (const auto& [j, c] : sum) {
            const cplx partner = sum.count(-j) ? sum.at(-j) : cplx{};
            if (std::abs(c - std::conj(partner)) > 1e-14 * std::max(1.0, std::abs(c))) {
                throw InvalidParameter("nonlinearity: modulation of v^" + std::to_string(p) +
                                       " is not conjugate symmetric at index " + std::to_string(j));
            }
        }
    }
}

int Nonlinearity::lowest_power() const {
    int lo = 1 << 30;
    for (const auto& [p, a] : coefficients) lo = std::min(lo, p);
    for (const auto& [p, m] : modulation) lo = std::min(lo, p);
    return lo;
}

int Nonlinearity::highest_power() const {
    int hi = 0;
    for (const auto& [p, a] : coefficients) hi = std::max(hi, p);
    for (const auto& [p, m] : modulation) hi = std::max(hi, p);
    return hi;
}

double Nonlinearity::value(double x, double v) const {
    double f = 0.0;
    for (const auto& [p, a] : coefficients) f += a * std::pow(v, p);
    for (const auto& [p, mods] : modulation) {
        cplx ap{};
        for (const auto& m : mods) ap += m.value * std::polar(1.0, m.index * x);
        f += ap.real() * std::pow(v, p);
    }
    return f;
}

CouplingTable CouplingTable::from_json(const nlohmann::json& j) {
    CouplingTable t;
    try {
        for (const auto& tab : j.at("tables")) {
            const int p = tab.at("degree").get<int>();
            auto& dst = t.by_degree[p];
            for (const auto& e : tab.at("entries")) {
                auto modes = e.at("modes").get<std::vector<int>>();
                if (static_cast<int>(modes.size()) != p) {
                    throw InvalidParameter("coupling table: entry size differs from degree");
                }
                std::sort(modes.begin(), modes.end());
                dst[modes] += e.at("value").get<double>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParameter(std::string("coupling table JSON: ") + e.what());
    }
    return t;
}

State to_complex(const RealState& rs, const Spectrum& spec) {
    const std::size_t n = spec.mode_count();
    if (rs.v.size() != n || rs.v_t.size() != n) throw InvalidParameter("to_complex: RealState size mismatch");
    State u(n);
    const double r2 = std::sqrt(2.0);
    if (spec.d() == 1) {
        const double scale = std::sqrt(kPi / 2.0);
        for (int nn = 1; nn <= spec.n_max(); ++nn) {
            const int plus = spec.circle_mode(nn);
            const int minus = spec.circle_mode(-nn);
            const double w = spec.omega(nn);
            // orthonormal exponential coefficients of v and v_t at +-n
            const cplx v_p = scale * cplx{rs.v[plus], -rs.v[minus]};
            const cplx v_m = std::conj(v_p);
            const cplx vt_p = scale * cplx{rs.v_t[plus], -rs.v_t[minus]};
            const cplx vt_m = std::conj(vt_p);
            const double sq = std::sqrt(w);
            u[plus] = (vt_p / sq + cplx{0, 1} * (sq * v_p)) / r2;
            u[minus] = (vt_m / sq + cplx{0, 1} * (sq * v_m)) / r2;
        }
        return u;
    }
    for (std::size_t m = 0; m < n; ++m) {
        const double sq = std::sqrt(spec.omega_of_mode(static_cast<int>(m)));
        u[m] = cplx{rs.v_t[m] / sq, sq * rs.v[m]} / r2;
    }
    return u;
}

RealState from_complex(const State& state, const Spectrum& spec) {
    const std::size_t n = spec.mode_count();
    if (state.size() != n) throw InvalidParameter("from_complex: state size mismatch");
    RealState rs{std::vector<double>(n), std::vector<double>(n)};
    const double r2 = std::sqrt(2.0);
    if (spec.d() == 1) {
        const double scale = std::sqrt(kPi / 2.0);
        for (int nn = 1; nn <= spec.n_max(); ++nn) {
            const int plus = spec.circle_mode(nn);
            const int minus = spec.circle_mode(-nn);
            const double sq = std::sqrt(spec.omega(nn));
            const cplx p_hat = (state[plus] + std::conj(state[minus])) / r2;
            const cplx q_hat = (state[plus] - std::conj(state[minus])) / (cplx{0, 1} * r2);
            const cplx v_hat = q_hat / sq;
            const cplx vt_hat = p_hat * sq;
            rs.v[plus] = v_hat.real() / scale;
            rs.v[minus] = -v_hat.imag() / scale;
            rs.v_t[plus] = vt_hat.real() / scale;
            rs.v_t[minus] = -vt_hat.imag() / scale;
        }
        return rs;
    }
    for (std::size_t m = 0; m < n; ++m) {
        const double sq = std::sqrt(spec.omega_of_mode(static_cast<int>(m)));
        rs.v[m] = r2 * state[m].imag() / sq;
        rs.v_t[m] = r2 * state[m].real() * sq;
    }
    return rs;
}

double circle_field(const std::vector<double>& coeffs, const Spectrum& spec, double x) {
    double v = 0.0;
    for (int n = 1; n <= spec.n_max(); ++n) {
        v += coeffs[static_cast<std::size_t>(spec.circle_mode(n))] * std::cos(n * x) +
             coeffs[static_cast<std::size_t>(spec.circle_mode(-n))] * std::sin(n * x);
    }
    return v;
}

PolyHamiltonian taylor_hamiltonian(const Nonlinearity& nl, const Spectrum& spec, int max_degree,
                                   const CouplingTable* table) {
    nl.validate();
    if (max_degree < nl.lowest_power()) {
        throw InvalidParameter("taylor_hamiltonian: max_degree below the lowest power of f");
    }
    if (spec.d() != 1 && table == nullptr) {
        throw UnsupportedManifold("taylor_hamiltonian: S^" + std::to_string(spec.d()) +
                                  " requires a coupling-coefficient table");
    }
    PolyHamiltonian h{spec, {}};
    for (int p = 3; p <= max_degree; ++p) {
        HomPoly part = spec.d() == 1 ? circle_part(nl, p, spec) : table_part(nl, p, spec, *table);
        if (!part.empty()) h.parts.emplace(p, std::move(part));
    }
    return h;
}

std::vector<double> actions(const State& state, const Spectrum& spec) {
    if (state.size() != spec.mode_count()) throw InvalidParameter("actions: state size mismatch");
    std::vector<double> j(static_cast<std::size_t>(spec.n_max()), 0.0);
    for (const Mode& m : spec.modes()) j[static_cast<std::size_t>(m.cluster - 1)] += std::norm(state[m.id]);
    return j;
}

double weighted_energy(const State& state, double s, const Spectrum& spec) {
    if (s < 0.0) throw InvalidParameter("weighted_energy: s must be >= 0");
    const auto j = actions(state, spec);
    double e = 0.0;
    for (std::size_t n = 0; n < j.size(); ++n) e += std::pow(static_cast<double>(n + 1), 2.0 * s) * j[n];
    return e;
}

double sobolev_norm(const State& state, double s, const Spectrum& spec) {
    return std::sqrt(weighted_energy(state, s, spec));
}

double hamiltonian_value(const PolyHamiltonian& h, const State& state) {
    double g2 = 0.0;
    for (const Mode& m : h.spec.modes()) g2 += h.spec.omega(m.cluster) * std::norm(state[m.id]);
    return g2 + evaluate(h.parts, state).real();
}

}  // namespace bnf
