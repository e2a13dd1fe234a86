#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "json.hpp"

#include "bnf/kgmodel.hpp"
#include "bnf/normalform.hpp"
#include "bnf/polyalg.hpp"
#include "bnf/spectrum.hpp"

namespace bnf {

enum class Scheme { StrangSplit, RkAdaptive };

struct IntegratorConfig {
    double dt = 1e-3;
    Scheme scheme = Scheme::StrangSplit;
    double local_tol = 1e-10;
    double t_end = 1.0;

    /// Throws InvalidParameter unless 0 < dt <= t_end and local_tol > 0.
    void validate() const;
};

struct Trajectory {
    double s = 2.0;
    std::vector<double> times;
    std::vector<std::vector<double>> actions;  // J_n per sample, index n - 1
    std::vector<double> hamiltonian;
    std::vector<double> sobolev;               // sqrt(sum n^{2s} J_n)
    std::vector<double> energy;                // sum n^{2s} J_n
    std::vector<State> checkpoints;            // filled when requested
    /// max_t |G(t) - G(0)| / |G(0)|
    double relative_energy_drift() const;
};

/// Exact flow of G2: each mode of cluster n rotates by exp(i omega_n t).
State linear_flow(const State& state, double t, const Spectrum& spec);

/// Called at t = 0 and after every observe_every steps.
using Observer = std::function<void(double t, const State& u)>;

/// Integrates u' = i grad_ubar (G2 + sum parts). Throws DivergenceError once
/// the l2 norm exceeds 1e3 times its initial value.
void integrate_observed(const State& u0, const PolyHamiltonian& h, const IntegratorConfig& cfg, int observe_every,
                        const Observer& observer);

Trajectory integrate(const State& u0, const PolyHamiltonian& h, const IntegratorConfig& cfg, int observe_every,
                     double s = 2.0, bool keep_states = false);

/// Default local tolerance for generator flows.
inline constexpr double kFlowTolerance = 1e-10;

/// Time-t flow of X_F = i grad_ubar F with an adaptive Dormand-Prince 5(4)
/// integrator. Throws FlowFailure on step-size underflow.
State generator_flow(const HomPoly& F, const State& state, double t, double tol = kFlowTolerance);
State generator_flow(const CompiledPoly& F, const State& state, double t, double tol = kFlowTolerance);

/// The composed normal-form change of variables T = Phi_1 o Phi_2 o ... o Phi_r,
/// with Phi_j the time-1 flow of the j-th generator.
class NormalFormTransform {
public:
    explicit NormalFormTransform(const std::vector<HomPoly>& generators, double tol = kFlowTolerance);

    State apply(const State& u) const;
    /// Phi_r^{-1} o ... o Phi_1^{-1}, realized with time -1 flows.
    State inverse(const State& u) const;
    bool trivial() const { return gens_.empty(); }

private:
    std::vector<CompiledPoly> gens_;
    double tol_;
};

struct PowerFit {
    double exponent = 0.0;
    double constant = 0.0;
    bool degenerate = false;  // some y <= 0, fit undefined
};

/// Least squares fit of log y = log constant + exponent * log x.
PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

struct NearIdentityFit {
    std::vector<double> amplitudes;
    std::vector<double> forward_deviation;  // max over directions of |T(u) - u|
    std::vector<double> inverse_deviation;  // same for T^{-1}
    PowerFit forward;
    PowerFit inverse;
};

/// Deviation of T and T^{-1} from the identity on random unit l2 directions
/// scaled to each amplitude. Needs >= 3 amplitudes.
NearIdentityFit near_identity_check(const std::vector<HomPoly>& generators, const std::vector<double>& amplitudes,
                                    const Spectrum& spec, int directions = 4, std::uint64_t seed = 1);

/// Complex Gaussian per mode rescaled to unit weighted energy sum n^{2s} J_n.
State random_unit_state(const Spectrum& spec, double s, std::uint64_t seed);

struct DriftRow {
    double eps = 0.0;
    double t_end = 0.0;
    double raw_drift = 0.0;          // max_{t,n} n^{2s} |J_n(t) - J_n(0)|
    double transformed_drift = 0.0;  // same for J_n o T^{-1}
    double energy_increment = 0.0;   // max_t |E(t) - E(0)|, E = sum n^{2s} J_n o T^{-1}
    double hamiltonian_drift = 0.0;  // max_t |G(t) - G(0)| / |G(0)|
    std::size_t samples = 0;
};

struct DriftTable {
    int r = 1;
    double s = 2.0;
    std::uint64_t seed = 0;
    std::vector<DriftRow> rows;
    PowerFit raw_fit;
    PowerFit transformed_fit;
};

struct DriftOptions {
    std::uint64_t seed = 1;
    double samples_per_unit_time = 100.0;
    int threads = 1;
};

/// For every eps integrates the original truncated flow from eps times a
/// random unit H^s state up to T = eps^{-r} and measures raw and transformed
/// action drift.
DriftTable drift_experiment(const PolyHamiltonian& h, const NormalFormResult& nf, const std::vector<double>& eps_list,
                            int r, double s, const IntegratorConfig& cfg, const DriftOptions& opts = {});

nlohmann::json to_json(const DriftTable& table);

}  // namespace bnf
