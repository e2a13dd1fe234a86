#include "bnf/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <string>

#include "bnf/errors.hpp"
#include "bnf/weights.hpp"

namespace bnf {

TupleWeights mu_S(std::span<const int> clusters) {
    if (clusters.size() < 2) {
        throw InvalidParameter("mu_S: tuple needs at least two entries");
    }
    std::vector<long> sorted(clusters.begin(), clusters.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    TupleWeights w;
    w.max = sorted[0];
    w.max2 = sorted[1];
    w.mu = sorted.size() >= 3 ? sorted[2] : 1;
    long total = 0;
    for (long n : sorted) total += n;
    long excess = 0;
    for (long n : sorted) excess += std::max(0L, n - (total - n));
    w.S = excess + w.mu;
    return w;
}

namespace {

constexpr std::size_t kMaxModes = 5'000'000;

// Dimension of the degree-n spherical harmonics on S^d:
// C(n+d, d) - C(n+d-2, d).
double harmonic_multiplicity(int n, int d) {
    auto binom = [](int a, int b) -> double {
        if (a < b || b < 0) return 0.0;
        double r = 1.0;
        for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
        return std::round(r);
    };
    return binom(n + d, d) - binom(n + d - 2, d);
}

}  // namespace

Spectrum::Spectrum(SphereParams params, int n_max) : params_(params), n_max_(n_max) {
    if (!(params.m > 0.0) || !std::isfinite(params.m)) {
        throw InvalidParameter("spectrum: mass must be finite and > 0, got " + std::to_string(params.m));
    }
    if (params.d < 1) {
        throw InvalidParameter("spectrum: dimension must be >= 1, got " + std::to_string(params.d));
    }
    if (n_max < 1) {
        throw InvalidParameter("spectrum: n_max must be >= 1, got " + std::to_string(n_max));
    }
    const int d = params.d;
    double total = 0.0;
    for (int n = 1; n <= n_max; ++n) total += harmonic_multiplicity(n, d);
    if (total > static_cast<double>(kMaxModes)) {
        throw InvalidParameter("spectrum: truncation has too many modes (" + std::to_string(total) + ")");
    }

    const double m2 = params.m * params.m;
    offsets_.reserve(n_max);
    omega_.reserve(n_max);
    lambda_.reserve(n_max);
    modes_.reserve(static_cast<std::size_t>(total));
    for (int n = 1; n <= n_max; ++n) {
        // lambda_n^2 is an exact integer
        const double lambda2 = static_cast<double>(static_cast<long long>(n) * (n + d - 1));
        lambda_.push_back(std::sqrt(lambda2));
        omega_.push_back(std::sqrt(lambda2 + m2));
        offsets_.push_back(static_cast<int>(modes_.size()));
        const int mult = static_cast<int>(harmonic_multiplicity(n, d));
        for (int j = 0; j < mult; ++j) {
            const int label = d == 1 ? (j == 0 ? 1 : -1) : j;
            modes_.push_back(Mode{static_cast<int>(modes_.size()), n, label});
        }
    }

    ClusterParams& cp = cluster_params_;
    cp.tau = 2.0 * std::numbers::pi;
    cp.alpha = 0.5 * (d - 1);
    cp.delta = 1.0;
    cp.n0 = 1;
    cp.D = d - 1;
    for (int n = 1; n <= n_max; ++n) {
        const double dev = std::abs(lambda_[n - 1] - (n + cp.alpha));
        cp.c0 = std::max(cp.c0, dev * std::pow(n, cp.delta));
        cp.C0 = std::max(cp.C0, multiplicity(n) / std::pow(n, cp.D));
    }
}

void Spectrum::check_cluster(int n) const {
    if (n < 1 || n > n_max_) {
        throw RangeError("cluster " + std::to_string(n) + " outside 1.." + std::to_string(n_max_));
    }
}

int Spectrum::cluster_of(int mode_id) const {
    if (mode_id < 0 || static_cast<std::size_t>(mode_id) >= modes_.size()) {
        throw RangeError("mode id " + std::to_string(mode_id) + " not in spectrum");
    }
    return modes_[mode_id].cluster;
}

double Spectrum::lambda(int n) const {
    check_cluster(n);
    return lambda_[n - 1];
}

double Spectrum::omega(int n) const {
    check_cluster(n);
    return omega_[n - 1];
}

int Spectrum::first_mode(int n) const {
    check_cluster(n);
    return offsets_[n - 1];
}

int Spectrum::multiplicity(int n) const {
    check_cluster(n);
    const int end = n == n_max_ ? static_cast<int>(modes_.size()) : offsets_[n];
    return end - offsets_[n - 1];
}

int Spectrum::circle_mode(int fourier_index) const {
    if (params_.d != 1) throw UnsupportedManifold("circle_mode: spectrum is not S^1");
    const int n = std::abs(fourier_index);
    check_cluster(n);
    return offsets_[n - 1] + (fourier_index > 0 ? 0 : 1);
}

int Spectrum::fourier_index(int mode_id) const {
    if (params_.d != 1) throw UnsupportedManifold("fourier_index: spectrum is not S^1");
    const int n = cluster_of(mode_id);
    return modes_[static_cast<std::size_t>(mode_id)].intra_label * n;
}

Spectrum build_sphere_spectrum(SphereParams params, int n_max) { return Spectrum(params, n_max); }

double small_divisor(const Spectrum& spec, const DivisorQuery& q) {
    if (q.clusters.size() < 2) throw InvalidParameter("small_divisor: need k+1 >= 2 clusters");
    if (q.ell < 0 || q.ell > static_cast<int>(q.clusters.size())) {
        throw InvalidParameter("small_divisor: ell outside 0..k+1");
    }
    double plus = 0.0;
    double minus = 0.0;
    for (std::size_t i = 0; i < q.clusters.size(); ++i) {
        const double w = spec.omega(q.clusters[i]);
        if (static_cast<int>(i) < q.ell) {
            plus += w;
        } else {
            minus += w;
        }
    }
    return plus - minus;
}

namespace {

// Calls fn on every nondecreasing tuple of the given size over [1, n_max].
template <typename Fn>
void for_each_multiset(int size, int n_max, std::vector<int>& buf, Fn&& fn) {
    buf.assign(size, 1);
    if (size == 0) {
        fn(buf);
        return;
    }
    while (true) {
        fn(buf);
        int pos = size - 1;
        while (pos >= 0 && buf[pos] == n_max) --pos;
        if (pos < 0) return;
        const int v = buf[pos] + 1;
        for (int i = pos; i < size; ++i) buf[i] = v;
    }
}

int histogram_bin(double weighted) {
    if (weighted <= 0.0) return kZeroBin;
    return static_cast<int>(std::floor(std::log10(weighted)));
}

}  // namespace

ScanReport divisor_bound_scan(const Spectrum& spec, int k, int ell, double nu_bar,
                              std::size_t keep_lowest) {
    if (k < 1) throw InvalidParameter("divisor_bound_scan: k must be >= 1");
    if (ell < 0 || ell > k + 1) throw InvalidParameter("divisor_bound_scan: ell outside 0..k+1");
    const int n_max = spec.n_max();
    const int n_plus = ell;
    const int n_minus = k + 1 - ell;
    const double threshold = kNumericResonanceThreshold * spec.max_omega();

    ScanReport report;
    report.k = k;
    report.ell = ell;
    report.nu_bar = nu_bar;
    report.min_weighted = std::numeric_limits<double>::infinity();

    // Precompute the minus-side multisets once; the plus side is streamed.
    std::vector<std::vector<int>> minus_sets;
    std::vector<double> minus_sums;
    std::vector<int> buf;
    for_each_multiset(n_minus, n_max, buf, [&](const std::vector<int>& t) {
        minus_sets.push_back(t);
        double s = 0.0;
        for (int n : t) s += spec.omega(n);
        minus_sums.push_back(s);
    });

    auto consider_lowest = [&](const ScanRecord& rec) {
        if (keep_lowest == 0) return;
        auto& low = report.lowest;
        if (low.size() == keep_lowest && rec.weighted >= low.back().weighted) return;
        auto pos = std::upper_bound(low.begin(), low.end(), rec.weighted,
                                    [](double w, const ScanRecord& r) { return w < r.weighted; });
        low.insert(pos, rec);
        if (low.size() > keep_lowest) low.pop_back();
    };

    std::vector<int> tuple(k + 1);
    std::vector<int> plus_buf;
    for_each_multiset(n_plus, n_max, plus_buf, [&](const std::vector<int>& plus) {
        double plus_sum = 0.0;
        for (int n : plus) plus_sum += spec.omega(n);
        std::copy(plus.begin(), plus.end(), tuple.begin());
        for (std::size_t j = 0; j < minus_sets.size(); ++j) {
            const auto& minus = minus_sets[j];
            if (n_plus == n_minus && plus == minus) continue;
            std::copy(minus.begin(), minus.end(), tuple.begin() + n_plus);
            const double divisor = plus_sum - minus_sums[j];
            const double mu = static_cast<double>(mu_S(tuple).mu);
            const double weighted = std::abs(divisor) * std::pow(mu, nu_bar);
            ++report.tuples;
            ++report.histogram[histogram_bin(weighted)];
            const bool flagged = std::abs(divisor) < threshold;
            const bool better = weighted < report.min_weighted;
            if (flagged || better || keep_lowest > 0) {
                ScanRecord rec{tuple, ell, divisor, mu, weighted};
                if (flagged) report.flagged.push_back(rec);
                if (better) {
                    report.min_weighted = weighted;
                    report.argmin = rec;
                }
                consider_lowest(rec);
            }
        }
    });
    if (report.tuples == 0) report.min_weighted = 0.0;
    return report;
}

std::vector<MassScanRow> mass_scan(int d, int k, const std::vector<double>& m_grid, int n_max,
                                   double nu_bar, int threads) {
    if (m_grid.empty()) throw InvalidParameter("mass_scan: empty mass grid");
    for (double m : m_grid) {
        if (!(m > 0.0)) throw InvalidParameter("mass_scan: masses must be > 0");
    }
    auto one = [&](double m) {
        const Spectrum spec = build_sphere_spectrum({d, m}, n_max);
        MassScanRow row;
        row.m = m;
        row.c = std::numeric_limits<double>::infinity();
        for (int ell = 0; ell <= k + 1; ++ell) {
            const ScanReport rep = divisor_bound_scan(spec, k, ell, nu_bar);
            row.flagged += static_cast<long long>(rep.flagged.size());
            if (rep.tuples > 0 && rep.min_weighted < row.c) {
                row.c = rep.min_weighted;
                row.argmin = rep.argmin;
            }
        }
        return row;
    };
    std::vector<MassScanRow> rows(m_grid.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < m_grid.size(); ++i) rows[i] = one(m_grid[i]);
        return rows;
    }
    for (std::size_t start = 0; start < m_grid.size(); start += static_cast<std::size_t>(threads)) {
        std::vector<std::future<MassScanRow>> jobs;
        const std::size_t end = std::min(m_grid.size(), start + static_cast<std::size_t>(threads));
        for (std::size_t i = start; i < end; ++i) jobs.push_back(std::async(std::launch::async, one, m_grid[i]));
        for (std::size_t i = start; i < end; ++i) rows[i] = jobs[i - start].get();
    }
    return rows;
}

}  // namespace bnf
