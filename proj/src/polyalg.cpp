#include "bnf/polyalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bnf/errors.hpp"

namespace bnf {

namespace {

constexpr cplx kI{0.0, 1.0};
// Cancellation residue below this fraction of the operand scale is dropped.
constexpr double kPruneRelative = 1e-15;

int multiplicity_of(const std::vector<int>& sorted, int mode) {
    auto [lo, hi] = std::equal_range(sorted.begin(), sorted.end(), mode);
    return static_cast<int>(hi - lo);
}

std::vector<int> remove_one(const std::vector<int>& sorted, int mode) {
    std::vector<int> out;
    out.reserve(sorted.size() - 1);
    bool removed = false;
    for (int m : sorted) {
        if (!removed && m == mode) {
            removed = true;
            continue;
        }
        out.push_back(m);
    }
    return out;
}

std::vector<int> merge_sorted(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

// a + b - {mode}, where mode is known to occur in b
std::vector<int> merge_minus(const std::vector<int>& a, const std::vector<int>& b, int mode) {
    std::vector<int> out;
    out.reserve(a.size() + b.size() - 1);
    bool removed = false;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() || ib != b.end()) {
        if (ib != b.end() && (ia == a.end() || *ib <= *ia)) {
            if (!removed && *ib == mode) {
                removed = true;
            } else {
                out.push_back(*ib);
            }
            ++ib;
        } else {
            out.push_back(*ia++);
        }
    }
    return out;
}

template <typename Range, typename Fn>
void for_each_distinct(const Range& sorted, Fn&& fn) {
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        fn(sorted[i], static_cast<int>(j - i));
        i = j;
    }
}

cplx monomial_value(const std::vector<int>& u, const std::vector<int>& ubar, const State& state) {
    cplx v{1.0, 0.0};
    for (int a : u) v *= state[static_cast<std::size_t>(a)];
    for (int b : ubar) v *= std::conj(state[static_cast<std::size_t>(b)]);
    return v;
}

void check_state(const MonomialKey& key, const State& state) {
    auto bad = [&](int m) { return m < 0 || static_cast<std::size_t>(m) >= state.size(); };
    if (std::any_of(key.u.begin(), key.u.end(), bad) || std::any_of(key.ubar.begin(), key.ubar.end(), bad)) {
        throw RangeError("state does not cover the polynomial's modes");
    }
}

}  // namespace

MonomialKey::MonomialKey(std::vector<int> u_modes, std::vector<int> ubar_modes)
    : u(std::move(u_modes)), ubar(std::move(ubar_modes)) {
    std::sort(u.begin(), u.end());
    std::sort(ubar.begin(), ubar.end());
}

void HomPoly::add(const MonomialKey& key, cplx c) { add(MonomialKey(key), c); }

void HomPoly::add(MonomialKey&& key, cplx c) {
    if (key.degree() != degree_) {
        throw InvalidParameter("HomPoly: key of degree " + std::to_string(key.degree()) +
                               " added to polynomial of degree " + std::to_string(degree_));
    }
    if (c == cplx{}) return;
    auto [it, inserted] = terms_.try_emplace(std::move(key), c);
    if (!inserted) {
        it->second += c;
        if (it->second == cplx{}) terms_.erase(it);
    }
}

cplx HomPoly::coeff(const MonomialKey& key) const {
    auto it = terms_.find(key);
    return it == terms_.end() ? cplx{} : it->second;
}

double HomPoly::max_abs() const {
    double m = 0.0;
    for (const auto& [key, c] : terms_) m = std::max(m, std::abs(c));
    return m;
}

void HomPoly::prune(double abs_tol) {
    std::erase_if(terms_, [abs_tol](const auto& kv) { return std::abs(kv.second) <= abs_tol; });
}

HomPoly& HomPoly::operator+=(const HomPoly& other) {
    if (other.empty()) return *this;
    if (empty()) {
        if (other.degree_ != degree_) throw InvalidParameter("HomPoly: degree mismatch in sum");
        terms_ = other.terms_;
        return *this;
    }
    const double scale = std::max(max_abs(), other.max_abs());
    for (const auto& [key, c] : other.terms_) add(key, c);
    prune(kPruneRelative * scale);
    return *this;
}

HomPoly& HomPoly::operator-=(const HomPoly& other) { return *this += other * cplx{-1.0, 0.0}; }

HomPoly& HomPoly::operator*=(cplx s) {
    if (s == cplx{}) {
        terms_.clear();
        return *this;
    }
    for (auto& [key, c] : terms_) c *= s;
    return *this;
}

HomPoly multiply(const HomPoly& a, const HomPoly& b) {
    HomPoly out(a.degree() + b.degree());
    for (const auto& [ka, ca] : a.terms()) {
        for (const auto& [kb, cb] : b.terms()) {
            out.add(MonomialKey(merge_sorted(ka.u, kb.u), merge_sorted(ka.ubar, kb.ubar)), ca * cb);
        }
    }
    return out;
}

HomPoly poisson_bracket(const HomPoly& f1, const HomPoly& f2) {
    HomPoly out(std::max(0, f1.degree() + f2.degree() - 2));
    if (f1.empty() || f2.empty()) return out;

    // Index F2 terms by the modes of their u and ubar slots.
    int max_mode = -1;
    for (const auto& [key, c] : f2.terms()) {
        if (!key.u.empty()) max_mode = std::max(max_mode, key.u.back());
        if (!key.ubar.empty()) max_mode = std::max(max_mode, key.ubar.back());
    }
    using TermRef = const HomPoly::TermMap::value_type*;
    std::vector<std::vector<TermRef>> by_u(static_cast<std::size_t>(max_mode + 1));
    std::vector<std::vector<TermRef>> by_ubar(static_cast<std::size_t>(max_mode + 1));
    for (const auto& term : f2.terms()) {
        for_each_distinct(term.first.u, [&](int m, int) { by_u[static_cast<std::size_t>(m)].push_back(&term); });
        for_each_distinct(term.first.ubar, [&](int m, int) { by_ubar[static_cast<std::size_t>(m)].push_back(&term); });
    }
    auto lookup = [&](const std::vector<std::vector<TermRef>>& index, int m) -> const std::vector<TermRef>* {
        if (m < 0 || m > max_mode) return nullptr;
        return &index[static_cast<std::size_t>(m)];
    };

    for (const auto& [ka, ca] : f1.terms()) {
        // i * (d_{u_j} F2) * (d_{ubar_j} F1)
        for_each_distinct(ka.ubar, [&](int j, int mult_a) {
            const auto* list = lookup(by_u, j);
            if (!list) return;
            for (TermRef tb : *list) {
                const auto& [kb, cb] = *tb;
                const int mult_b = multiplicity_of(kb.u, j);
                MonomialKey key;
                key.u = merge_minus(ka.u, kb.u, j);
                key.ubar = merge_minus(kb.ubar, ka.ubar, j);
                out.add(std::move(key), kI * static_cast<double>(mult_a * mult_b) * ca * cb);
            }
        });
        // -i * (d_{ubar_j} F2) * (d_{u_j} F1)
        for_each_distinct(ka.u, [&](int j, int mult_a) {
            const auto* list = lookup(by_ubar, j);
            if (!list) return;
            for (TermRef tb : *list) {
                const auto& [kb, cb] = *tb;
                const int mult_b = multiplicity_of(kb.ubar, j);
                MonomialKey key;
                key.u = merge_minus(kb.u, ka.u, j);
                key.ubar = merge_minus(ka.ubar, kb.ubar, j);
                out.add(std::move(key), -kI * static_cast<double>(mult_a * mult_b) * ca * cb);
            }
        });
    }
    out.prune(kPruneRelative * f1.max_abs() * f2.max_abs());
    return out;
}

HomPoly gradient(const HomPoly& p, Slot which, int mode) {
    HomPoly out(std::max(0, p.degree() - 1));
    for (const auto& [key, c] : p.terms()) {
        const auto& slots = which == Slot::U ? key.u : key.ubar;
        const int mult = multiplicity_of(slots, mode);
        if (mult == 0) continue;
        MonomialKey reduced;
        if (which == Slot::U) {
            reduced.u = remove_one(key.u, mode);
            reduced.ubar = key.ubar;
        } else {
            reduced.u = key.u;
            reduced.ubar = remove_one(key.ubar, mode);
        }
        out.add(std::move(reduced), static_cast<double>(mult) * c);
    }
    return out;
}

cplx evaluate(const HomPoly& p, const State& state) {
    cplx sum{};
    for (const auto& [key, c] : p.terms()) {
        check_state(key, state);
        sum += c * monomial_value(key.u, key.ubar, state);
    }
    return sum;
}

cplx evaluate(const PolyFamily& parts, const State& state) {
    cplx sum{};
    for (const auto& [deg, p] : parts) sum += evaluate(p, state);
    return sum;
}

State vector_field(const HomPoly& p, const State& state) {
    State out;
    CompiledPoly(p).field(state, out);
    return out;
}

double reality_defect(const HomPoly& p) {
    double worst = 0.0;
    for (const auto& [key, c] : p.terms()) {
        worst = std::max(worst, std::abs(c - std::conj(p.coeff(key.conjugate()))));
    }
    return worst;
}

bool reality_check(const HomPoly& p, double rel_tol) {
    const double tol = rel_tol * p.max_abs();
    for (const auto& [key, c] : p.terms()) {
        const cplx partner = p.coeff(key.conjugate());
        if (rel_tol == 0.0) {
            if (c != std::conj(partner)) return false;
        } else if (std::abs(c - std::conj(partner)) > tol) {
            return false;
        }
    }
    return true;
}

HomPoly symmetrize_real(const HomPoly& p) {
    HomPoly out(p.degree());
    for (const auto& [key, c] : p.terms()) {
        out.add(key, 0.5 * c);
        out.add(key.conjugate(), 0.5 * std::conj(c));
    }
    return out;
}

std::vector<int> cluster_tuple(const MonomialKey& key, const Spectrum& spec) {
    std::vector<int> clusters;
    clusters.reserve(static_cast<std::size_t>(key.degree()));
    for (int a : key.u) clusters.push_back(spec.cluster_of(a));
    for (int b : key.ubar) clusters.push_back(spec.cluster_of(b));
    return clusters;
}

WeightReport class_norm(const HomPoly& p, const Spectrum& spec, double nu, int N) {
    if (N < 0) throw InvalidParameter("class_norm: N must be >= 0");
    WeightReport report;
    report.nu = nu;
    report.N = N;
    for (const auto& [key, c] : p.terms()) {
        if (key.degree() < 2) continue;
        const TupleWeights w = mu_S(cluster_tuple(key, spec));
        const double value = std::abs(c) * std::pow(static_cast<double>(w.S), N) /
                             std::pow(static_cast<double>(w.mu), nu + N);
        if (value > report.best_constant) {
            report.best_constant = value;
            report.argmax_key = key;
        }
    }
    return report;
}

CompiledPoly::CompiledPoly(const PolyFamily& parts) {
    for (const auto& [deg, p] : parts) add_part(p);
}

CompiledPoly::CompiledPoly(const HomPoly& p) { add_part(p); }

void CompiledPoly::add_part(const HomPoly& p) {
    for (const auto& [key, c] : p.terms()) {
        value_terms_.push_back(Term{c, -1, key.u, key.ubar});
        for_each_distinct(key.ubar, [&](int j, int mult) {
            field_terms_.push_back(Term{kI * static_cast<double>(mult) * c, j, key.u, remove_one(key.ubar, j)});
        });
    }
}

cplx CompiledPoly::value(const State& state) const {
    cplx sum{};
    for (const Term& t : value_terms_) sum += t.coeff * monomial_value(t.u, t.ubar, state);
    return sum;
}

void CompiledPoly::field(const State& state, State& out) const {
    out.assign(state.size(), cplx{});
    for (const Term& t : field_terms_) {
        if (static_cast<std::size_t>(t.target) >= state.size()) {
            throw RangeError("state does not cover the polynomial's modes");
        }
        out[static_cast<std::size_t>(t.target)] += t.coeff * monomial_value(t.u, t.ubar, state);
    }
}

nlohmann::json to_json(const HomPoly& p) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [key, c] : p.terms()) {
        terms.push_back({{"u", key.u}, {"ubar", key.ubar}, {"re", c.real()}, {"im", c.imag()}});
    }
    return {{"degree", p.degree()}, {"terms", std::move(terms)}};
}

HomPoly hompoly_from_json(const nlohmann::json& j) {
    try {
        HomPoly p(j.at("degree").get<int>());
        for (const auto& t : j.at("terms")) {
            MonomialKey key(t.at("u").get<std::vector<int>>(), t.at("ubar").get<std::vector<int>>());
            p.add(std::move(key), cplx{t.at("re").get<double>(), t.value("im", 0.0)});
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParameter(std::string("polynomial JSON: ") + e.what());
    }
}

nlohmann::json to_json(const PolyFamily& parts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [deg, p] : parts) arr.push_back(to_json(p));
    return {{"parts", std::move(arr)}};
}

PolyFamily family_from_json(const nlohmann::json& j) {
    PolyFamily parts;
    auto insert = [&](const nlohmann::json& doc) {
        HomPoly p = hompoly_from_json(doc);
        const int deg = p.degree();
        auto [it, inserted] = parts.try_emplace(deg, std::move(p));
        if (!inserted) it->second += hompoly_from_json(doc);
    };
    if (j.is_object() && j.contains("parts")) {
        for (const auto& doc : j.at("parts")) insert(doc);
    } else if (j.is_array()) {
        for (const auto& doc : j) insert(doc);
    } else {
        insert(j);
    }
    return parts;
}

}  // namespace bnf
