#pragma once

#include <cstddef>
#include <map>
#include <vector>

namespace bnf {

struct SphereParams {
    int d = 1;
    double m = 1.0;
};

/// One eigenfunction of the truncated Laplacian. On S^1 the intra-cluster
/// label is the sign of the Fourier index, so the mode is e^{i*label*cluster*x}.
struct Mode {
    int id = 0;
    int cluster = 1;
    int intra_label = 0;
};

/// Diagnostics of the cluster model K_n = [2 pi n / tau + alpha - c0/n^delta,
/// 2 pi n / tau + alpha + c0/n^delta] with #modes(K_n) <= C0 n^D.
struct ClusterParams {
    double tau = 0.0;
    double alpha = 0.0;
    double c0 = 0.0;
    double delta = 1.0;
    double C0 = 0.0;
    double D = 0.0;
    int n0 = 1;
};

/// Frequencies and mode bookkeeping for Klein-Gordon on S^d truncated at
/// cluster n_max. Immutable after construction.
class Spectrum {
public:
    Spectrum(SphereParams params, int n_max);

    const SphereParams& params() const { return params_; }
    int d() const { return params_.d; }
    double mass() const { return params_.m; }
    int n_max() const { return n_max_; }

    const std::vector<Mode>& modes() const { return modes_; }
    std::size_t mode_count() const { return modes_.size(); }

    /// Cluster index of a mode id; throws RangeError if unknown.
    int cluster_of(int mode_id) const;
    /// sqrt(n(n+d-1)); valid for 1 <= n <= n_max.
    double lambda(int n) const;
    /// sqrt(lambda_n^2 + m^2).
    double omega(int n) const;
    double omega_of_mode(int mode_id) const { return omega(cluster_of(mode_id)); }
    double max_omega() const { return omega(n_max_); }

    /// Mode ids of cluster n are contiguous: [first_mode(n), first_mode(n) + multiplicity(n)).
    int first_mode(int n) const;
    int multiplicity(int n) const;

    const ClusterParams& cluster_params() const { return cluster_params_; }

    /// S^1 only: mode id of the Fourier index k != 0, and its inverse.
    int circle_mode(int fourier_index) const;
    int fourier_index(int mode_id) const;

private:
    void check_cluster(int n) const;

    SphereParams params_;
    int n_max_;
    std::vector<Mode> modes_;
    std::vector<int> offsets_;       // offsets_[n-1] = first mode id of cluster n
    std::vector<double> omega_;      // omega_[n-1]
    std::vector<double> lambda_;
    ClusterParams cluster_params_;
};

/// Throws InvalidParameter for m <= 0, d < 1 or n_max < 1.
Spectrum build_sphere_spectrum(SphereParams params, int n_max);

/// Cluster tuple (n_1, ..., n_{k+1}) with sign pattern: + on the first ell
/// entries and - on the rest.
struct DivisorQuery {
    std::vector<int> clusters;
    int ell = 0;
};

/// omega_{n_1} + ... + omega_{n_ell} - omega_{n_{ell+1}} - ... - omega_{n_{k+1}}.
double small_divisor(const Spectrum& spec, const DivisorQuery& q);

/// Relative threshold (times max omega) under which a divisor is reported as
/// numerically resonant.
inline constexpr double kNumericResonanceThreshold = 1e-12;

struct ScanRecord {
    std::vector<int> clusters;
    int ell = 0;
    double divisor = 0.0;
    double mu = 1.0;
    double weighted = 0.0;  // |divisor| * mu^nu_bar
};

struct ScanReport {
    int k = 0;
    int ell = 0;
    double nu_bar = 0.0;
    long long tuples = 0;
    double min_weighted = 0.0;  // empirical constant c
    ScanRecord argmin;
    /// floor(log10(weighted)) -> count; exact zeros land in bin kZeroBin.
    std::map<int, long long> histogram;
    std::vector<ScanRecord> flagged;  // numerically resonant tuples
    std::vector<ScanRecord> lowest;   // smallest weighted values, ascending
};

inline constexpr int kZeroBin = -999;

/// Exhaustive scan over tuples of clusters 1..n_max with the first ell and
/// the last k+1-ell slots taken as multisets, skipping tuples whose two
/// multisets coincide. keep_lowest bounds the size of ScanReport::lowest.
ScanReport divisor_bound_scan(const Spectrum& spec, int k, int ell, double nu_bar,
                              std::size_t keep_lowest = 0);

struct MassScanRow {
    double m = 0.0;
    double c = 0.0;
    ScanRecord argmin;
    long long flagged = 0;
};

/// Per mass, the minimum of divisor_bound_scan over every ell in 0..k+1.
std::vector<MassScanRow> mass_scan(int d, int k, const std::vector<double>& m_grid, int n_max,
                                   double nu_bar, int threads = 1);

}  // namespace bnf
