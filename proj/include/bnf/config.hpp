#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bnf/dynamics.hpp"
#include "bnf/errors.hpp"
#include "bnf/kgmodel.hpp"

namespace bnf {

inline constexpr const char* kToolName = "bnf";
inline constexpr const char* kToolVersion = "1.0.0";

struct FieldIssue {
    std::string field;    // dotted path, e.g. "integrator.dt"
    std::string message;
};

/// Validation failure carrying one entry per offending field.
class ConfigError : public InvalidParameter {
public:
    explicit ConfigError(std::vector<FieldIssue> issues);
    ConfigError(std::string field, std::string message);
    const std::vector<FieldIssue>& issues() const { return issues_; }

private:
    std::vector<FieldIssue> issues_;
};

struct RunConfig {
    // manifold
    int d = 1;
    double m = 0.0;  // required
    int n_max = 8;

    // nonlinearity (required); coupling_table is a path, needed for d >= 2
    Nonlinearity nonlinearity;
    std::string coupling_table;

    int r0 = 2;

    IntegratorConfig integrator{1e-3, Scheme::StrangSplit, 1e-10, 10.0};

    // experiments
    std::vector<double> eps{0.1, 0.05, 0.025};
    double s = 2.0;
    int r = 1;
    std::uint64_t seed = 1;
    double samples_per_unit_time = 100.0;
    double amplitude = 0.1;
    double flow_tol = kFlowTolerance;

    // divisor and mass scans
    int scan_k = 3;
    std::optional<double> nu_bar;  // default k + 2
    int keep_lowest = 20;
    double m_min = 0.5;
    double m_max = 2.0;
    int m_count = 31;

    std::string output_dir = "out";
    int threads = 1;

    double nu_bar_for(int k) const { return nu_bar ? *nu_bar : k + 2.0; }

    /// Parses and validates; unknown keys and bad values are all reported at once.
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path);

    /// Canonical form with every default filled in.
    nlohmann::json to_json() const;

    /// Every invalid field; empty when the configuration is usable.
    std::vector<FieldIssue> issues() const;
    /// Throws ConfigError listing every invalid field.
    void validate() const;

    /// FNV-1a (64 bit) of the canonical JSON, ignoring output_dir and threads,
    /// as 16 hex digits.
    std::string hash() const;
};

std::uint64_t fnv1a64(const std::string& bytes);

Spectrum build_spectrum(const RunConfig& cfg);

/// Taylor Hamiltonian of the configured nonlinearity through max_degree,
/// reading the coupling table when d >= 2.
PolyHamiltonian build_hamiltonian(const RunConfig& cfg, int max_degree);

}  // namespace bnf
