#include "bnf/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <string>

#include "bnf/errors.hpp"

namespace bnf {

namespace {

constexpr cplx kI{0.0, 1.0};
constexpr double kDivergenceFactor = 1e3;

double l2_norm(const State& u) {
    double s = 0.0;
    for (const auto& z : u) s += std::norm(z);
    return std::sqrt(s);
}

double max_abs(const State& u) {
    double m = 0.0;
    for (const auto& z : u) m = std::max(m, std::abs(z));
    return m;
}

// y + h * sum_i c_i k_i
State combine(const State& y, double h, std::initializer_list<std::pair<double, const State*>> terms) {
    State out = y;
    for (const auto& [c, k] : terms) {
        if (c == 0.0) continue;
        const double hc = h * c;
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += hc * (*k)[j];
    }
    return out;
}

// Adaptive Dormand-Prince 5(4) from t = 0 to t = span (either sign).
template <typename Field>
State dormand_prince(const Field& field, State y, double span, double tol) {
    if (span == 0.0) return y;
    const double ref = max_abs(y);
    if (ref == 0.0) return y;
    const double dir = span > 0 ? 1.0 : -1.0;
    const double total = std::abs(span);
    double t = 0.0;
    double h = std::min(total, 0.1);
    const double h_min = 1e-12 * total;
    State k1, k2, k3, k4, k5, k6, k7;
    field(y, k1);
    long steps = 0;
    while (t < total) {
        if (++steps > 2'000'000) throw FlowFailure("generator flow: step budget exhausted");
        if (t + h > total) h = total - t;
        const double hs = dir * h;
        field(combine(y, hs, {{1.0 / 5, &k1}}), k2);
        field(combine(y, hs, {{3.0 / 40, &k1}, {9.0 / 40, &k2}}), k3);
        field(combine(y, hs, {{44.0 / 45, &k1}, {-56.0 / 15, &k2}, {32.0 / 9, &k3}}), k4);
        field(combine(y, hs, {{19372.0 / 6561, &k1}, {-25360.0 / 2187, &k2}, {64448.0 / 6561, &k3},
                              {-212.0 / 729, &k4}}),
              k5);
        field(combine(y, hs, {{9017.0 / 3168, &k1}, {-355.0 / 33, &k2}, {46732.0 / 5247, &k3},
                              {49.0 / 176, &k4}, {-5103.0 / 18656, &k5}}),
              k6);
        State y5 = combine(y, hs, {{35.0 / 384, &k1}, {500.0 / 1113, &k3}, {125.0 / 192, &k4},
                                   {-2187.0 / 6784, &k5}, {11.0 / 84, &k6}});
        field(y5, k7);
        // difference between the 5th and embedded 4th order solutions
        constexpr double e1 = 35.0 / 384 - 5179.0 / 57600;
        constexpr double e3 = 500.0 / 1113 - 7571.0 / 16695;
        constexpr double e4 = 125.0 / 192 - 393.0 / 640;
        constexpr double e5 = -2187.0 / 6784 + 92097.0 / 339200;
        constexpr double e6 = 11.0 / 84 - 187.0 / 2100;
        constexpr double e7 = -1.0 / 40;
        double err = 0.0;
        for (std::size_t j = 0; j < y.size(); ++j) {
            const cplx e = hs * (e1 * k1[j] + e3 * k3[j] + e4 * k4[j] + e5 * k5[j] + e6 * k6[j] + e7 * k7[j]);
            const double sc = tol * (ref + std::max(std::abs(y[j]), std::abs(y5[j])));
            err = std::max(err, std::abs(e) / sc);
        }
        if (!std::isfinite(err)) throw FlowFailure("generator flow: non-finite state");
        if (err <= 1.0) {
            t += h;
            y = std::move(y5);
            k1 = k7;
        }
        const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h *= factor;
        if (t < total && h < h_min) {
            throw FlowFailure("generator flow: step size underflow at t = " + std::to_string(dir * t) +
                              " (amplitude too large)");
        }
    }
    return y;
}

}  // namespace

void IntegratorConfig::validate() const {
    if (!(dt > 0.0)) throw InvalidParameter("integrator: dt must be > 0");
    if (!(t_end > 0.0)) throw InvalidParameter("integrator: t_end must be > 0");
    if (dt > t_end) throw InvalidParameter("integrator: dt must not exceed t_end");
    if (!(local_tol > 0.0)) throw InvalidParameter("integrator: local_tol must be > 0");
}

double Trajectory::relative_energy_drift() const {
    if (hamiltonian.empty()) return 0.0;
    const double g0 = hamiltonian.front();
    double worst = 0.0;
    for (double g : hamiltonian) worst = std::max(worst, std::abs(g - g0));
    return g0 != 0.0 ? worst / std::abs(g0) : worst;
}

State linear_flow(const State& state, double t, const Spectrum& spec) {
    if (state.size() != spec.mode_count()) throw InvalidParameter("linear_flow: state size mismatch");
    State out(state.size());
    for (const Mode& m : spec.modes()) out[m.id] = state[m.id] * std::polar(1.0, spec.omega(m.cluster) * t);
    return out;
}

void integrate_observed(const State& u0, const PolyHamiltonian& h, const IntegratorConfig& cfg, int observe_every,
                        const Observer& observer) {
    cfg.validate();
    if (observe_every < 1) throw InvalidParameter("integrate: observe_every must be >= 1");
    const Spectrum& spec = h.spec;
    if (u0.size() != spec.mode_count()) throw InvalidParameter("integrate: state size mismatch");

    const CompiledPoly nonlinear(h.parts);
    const long n_steps = static_cast<long>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
    const double dt = cfg.t_end / static_cast<double>(n_steps);
    const double norm0 = l2_norm(u0);
    const double blow_up = kDivergenceFactor * norm0;

    State u = u0;
    observer(0.0, u);
    double last_valid = 0.0;
    auto check = [&](double t) {
        const double n = l2_norm(u);
        if (!std::isfinite(n) || (norm0 > 0.0 && n > blow_up)) {
            throw DivergenceError("integrate: divergence after t = " + std::to_string(last_valid), last_valid);
        }
        last_valid = t;
    };

    if (cfg.scheme == Scheme::StrangSplit) {
        std::vector<cplx> half_phase(u.size());
        for (const Mode& m : spec.modes()) half_phase[m.id] = std::polar(1.0, spec.omega(m.cluster) * 0.5 * dt);
        State k(u.size());
        State mid(u.size());
        for (long step = 1; step <= n_steps; ++step) {
            for (std::size_t j = 0; j < u.size(); ++j) u[j] *= half_phase[j];
            if (!nonlinear.empty()) {
                nonlinear.field(u, k);
                for (std::size_t j = 0; j < u.size(); ++j) mid[j] = u[j] + 0.5 * dt * k[j];
                nonlinear.field(mid, k);
                for (std::size_t j = 0; j < u.size(); ++j) u[j] += dt * k[j];
            }
            for (std::size_t j = 0; j < u.size(); ++j) u[j] *= half_phase[j];
            const double t = static_cast<double>(step) * dt;
            check(t);
            if (step % observe_every == 0 || step == n_steps) observer(t, u);
        }
        return;
    }

    std::vector<double> omega(u.size());
    for (const Mode& m : spec.modes()) omega[m.id] = spec.omega(m.cluster);
    auto full_field = [&](const State& y, State& out) {
        nonlinear.field(y, out);
        for (std::size_t j = 0; j < y.size(); ++j) out[j] += kI * omega[j] * y[j];
    };
    for (long step = observe_every; step - observe_every < n_steps; step += observe_every) {
        const long upto = std::min(step, n_steps);
        const double t0 = static_cast<double>(step - observe_every) * dt;
        const double t1 = static_cast<double>(upto) * dt;
        try {
            u = dormand_prince(full_field, u, t1 - t0, cfg.local_tol);
        } catch (const FlowFailure&) {
            throw DivergenceError("integrate: adaptive step failure after t = " + std::to_string(last_valid),
                                  last_valid);
        }
        check(t1);
        observer(t1, u);
    }
}

Trajectory integrate(const State& u0, const PolyHamiltonian& h, const IntegratorConfig& cfg, int observe_every,
                     double s, bool keep_states) {
    Trajectory traj;
    traj.s = s;
    integrate_observed(u0, h, cfg, observe_every, [&](double t, const State& u) {
        traj.times.push_back(t);
        traj.actions.push_back(actions(u, h.spec));
        traj.hamiltonian.push_back(hamiltonian_value(h, u));
        const double e = weighted_energy(u, s, h.spec);
        traj.energy.push_back(e);
        traj.sobolev.push_back(std::sqrt(e));
        if (keep_states) traj.checkpoints.push_back(u);
    });
    return traj;
}

State generator_flow(const HomPoly& F, const State& state, double t, double tol) {
    return generator_flow(CompiledPoly(F), state, t, tol);
}

State generator_flow(const CompiledPoly& F, const State& state, double t, double tol) {
    if (std::abs(t) > 1.0) throw InvalidParameter("generator_flow: |t| must be <= 1");
    if (F.empty()) return state;
    auto field = [&F](const State& y, State& out) { F.field(y, out); };
    return dormand_prince(field, state, t, tol);
}

NormalFormTransform::NormalFormTransform(const std::vector<HomPoly>& generators, double tol) : tol_(tol) {
    for (const auto& g : generators) {
        if (!g.empty()) gens_.emplace_back(g);
    }
}

State NormalFormTransform::apply(const State& u) const {
    State y = u;
    for (auto it = gens_.rbegin(); it != gens_.rend(); ++it) y = generator_flow(*it, y, 1.0, tol_);
    return y;
}

State NormalFormTransform::inverse(const State& u) const {
    State y = u;
    for (const auto& g : gens_) y = generator_flow(g, y, -1.0, tol_);
    return y;
}

PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidParameter("fit_power_law: need >= 2 paired samples");
    PowerFit fit;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            fit.degenerate = true;
            fit.exponent = std::numeric_limits<double>::quiet_NaN();
            fit.constant = 0.0;
            return fit;
        }
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    fit.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.constant = std::exp((sy - fit.exponent * sx) / n);
    return fit;
}

State random_unit_state(const Spectrum& spec, double s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    State u(spec.mode_count());
    for (auto& z : u) {
        const double re = g(rng);
        const double im = g(rng);
        z = cplx{re, im};
    }
    const double e = weighted_energy(u, s, spec);
    for (auto& z : u) z /= std::sqrt(e);
    return u;
}

NearIdentityFit near_identity_check(const std::vector<HomPoly>& generators, const std::vector<double>& amplitudes,
                                    const Spectrum& spec, int directions, std::uint64_t seed) {
    if (amplitudes.size() < 3) throw InvalidParameter("near_identity_check: need >= 3 amplitudes");
    if (directions < 1) throw InvalidParameter("near_identity_check: need >= 1 direction");
    const NormalFormTransform T(generators);
    std::vector<State> dirs;
    for (int d = 0; d < directions; ++d) {
        State u = random_unit_state(spec, 0.0, seed + static_cast<std::uint64_t>(d));
        dirs.push_back(std::move(u));
    }
    NearIdentityFit fit;
    fit.amplitudes = amplitudes;
    for (double a : amplitudes) {
        double fwd = 0.0, inv = 0.0;
        for (const State& d : dirs) {
            State u = d;
            for (auto& z : u) z *= a;
            State tu = T.apply(u);
            State ti = T.inverse(u);
            for (std::size_t j = 0; j < u.size(); ++j) {
                tu[j] -= u[j];
                ti[j] -= u[j];
            }
            fwd = std::max(fwd, l2_norm(tu));
            inv = std::max(inv, l2_norm(ti));
        }
        fit.forward_deviation.push_back(fwd);
        fit.inverse_deviation.push_back(inv);
    }
    fit.forward = fit_power_law(amplitudes, fit.forward_deviation);
    fit.inverse = fit_power_law(amplitudes, fit.inverse_deviation);
    return fit;
}

namespace {

double weighted_max_change(const std::vector<double>& j, const std::vector<double>& j0, double s) {
    double worst = 0.0;
    for (std::size_t n = 0; n < j.size(); ++n) {
        worst = std::max(worst, std::pow(static_cast<double>(n + 1), 2.0 * s) * std::abs(j[n] - j0[n]));
    }
    return worst;
}

double weighted_sum(const std::vector<double>& j, double s) {
    double e = 0.0;
    for (std::size_t n = 0; n < j.size(); ++n) e += std::pow(static_cast<double>(n + 1), 2.0 * s) * j[n];
    return e;
}

}  // namespace

DriftTable drift_experiment(const PolyHamiltonian& h, const NormalFormResult& nf, const std::vector<double>& eps_list,
                            int r, double s, const IntegratorConfig& cfg, const DriftOptions& opts) {
    if (r < 1) throw InvalidParameter("drift_experiment: r must be >= 1");
    if (eps_list.size() < 3) throw InvalidParameter("drift_experiment: need >= 3 eps values");
    for (double e : eps_list) {
        if (!(e > 0.0) || e >= 1.0) throw InvalidParameter("drift_experiment: eps values must lie in (0, 1)");
    }
    if (static_cast<int>(nf.generators.size()) < r) {
        throw InvalidParameter("drift_experiment: normal form order r0 must be >= r");
    }
    const Spectrum& spec = h.spec;
    const State unit = random_unit_state(spec, s, opts.seed);
    const NormalFormTransform T(nf.generators);

    auto run_one = [&](double eps) {
        DriftRow row;
        row.eps = eps;
        row.t_end = std::pow(eps, -r);
        IntegratorConfig c = cfg;
        c.t_end = row.t_end;
        const int every = std::max(1, static_cast<int>(std::lround(1.0 / (opts.samples_per_unit_time * c.dt))));
        State u0 = unit;
        for (auto& z : u0) z *= eps;

        std::vector<double> raw0, tr0;
        double e0 = 0.0, g0 = 0.0;
        try {
            integrate_observed(u0, h, c, every, [&](double t, const State& u) {
                const auto raw = actions(u, spec);
                const auto tr = actions(T.inverse(u), spec);
                const double g = hamiltonian_value(h, u);
                if (t == 0.0) {
                    raw0 = raw;
                    tr0 = tr;
                    e0 = weighted_sum(tr, s);
                    g0 = g;
                }
                row.raw_drift = std::max(row.raw_drift, weighted_max_change(raw, raw0, s));
                row.transformed_drift = std::max(row.transformed_drift, weighted_max_change(tr, tr0, s));
                row.energy_increment = std::max(row.energy_increment, std::abs(weighted_sum(tr, s) - e0));
                row.hamiltonian_drift = std::max(row.hamiltonian_drift, std::abs(g - g0) / std::abs(g0));
                ++row.samples;
            });
        } catch (const DivergenceError& e) {
            throw DivergenceError(std::string(e.what()) + " (eps = " + std::to_string(eps) + ")",
                                  e.last_valid_time());
        }
        return row;
    };

    DriftTable table;
    table.r = r;
    table.s = s;
    table.seed = opts.seed;
    table.rows.resize(eps_list.size());
    if (opts.threads <= 1) {
        for (std::size_t i = 0; i < eps_list.size(); ++i) table.rows[i] = run_one(eps_list[i]);
    } else {
        std::vector<std::future<DriftRow>> jobs;
        for (double eps : eps_list) jobs.push_back(std::async(std::launch::async, run_one, eps));
        for (std::size_t i = 0; i < jobs.size(); ++i) table.rows[i] = jobs[i].get();
    }
    std::vector<double> xs, raw, tr;
    for (const auto& row : table.rows) {
        xs.push_back(row.eps);
        raw.push_back(row.raw_drift);
        tr.push_back(row.transformed_drift);
    }
    table.raw_fit = fit_power_law(xs, raw);
    table.transformed_fit = fit_power_law(xs, tr);
    return table;
}

nlohmann::json to_json(const DriftTable& table) {
    auto fit_json = [](const PowerFit& f) -> nlohmann::json {
        if (f.degenerate) return {{"exponent", nullptr}, {"constant", f.constant}};
        return {{"exponent", f.exponent}, {"constant", f.constant}};
    };
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows) {
        rows.push_back({{"eps", r.eps},
                        {"t_end", r.t_end},
                        {"raw_drift", r.raw_drift},
                        {"transformed_drift", r.transformed_drift},
                        {"energy_increment", r.energy_increment},
                        {"hamiltonian_drift", r.hamiltonian_drift},
                        {"samples", r.samples}});
    }
    nlohmann::json j = fit_json(table.transformed_fit);
    j["r"] = table.r;
    j["s"] = table.s;
    j["seed"] = table.seed;
    j["raw"] = fit_json(table.raw_fit);
    j["transformed"] = fit_json(table.transformed_fit);
    j["rows"] = std::move(rows);
    return j;
}

}  // namespace bnf
