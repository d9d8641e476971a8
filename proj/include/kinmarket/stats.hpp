#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

#include "kinmarket/error.hpp"
#include "kinmarket/quadrature.hpp"

namespace kinmarket::stats {

/// Fixed-layout histogram. Densities are normalized by the number of
/// in-range samples, so sum(density * width) == 1 whenever any sample
/// falls inside; out-of-range samples are only counted.
class Histogram {
public:
    explicit Histogram(std::vector<double> edges) : edges_(std::move(edges)) {
        if (edges_.size() < 2) throw ConfigError("histogram needs at least one bin");
        for (std::size_t i = 1; i < edges_.size(); ++i)
            if (!(edges_[i] > edges_[i - 1]))
                throw ConfigError("histogram edges must be strictly increasing");
        counts_.assign(edges_.size() - 1, 0);
    }

    static Histogram uniform(double lo, double hi, std::size_t bins) {
        if (bins == 0 || !(hi > lo)) throw ConfigError("histogram: need bins > 0 and hi > lo");
        std::vector<double> e(bins + 1);
        for (std::size_t i = 0; i <= bins; ++i)
            e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
        e.back() = hi;
        return Histogram(std::move(e));
    }

    static Histogram from_samples(std::span<const double> samples, double lo, double hi,
                                  std::size_t bins) {
        auto h = uniform(lo, hi, bins);
        h.add(samples);
        return h;
    }

    void add(double x) {
        if (!(x >= edges_.front())) {
            ++underflow_;
            return;
        }
        if (x > edges_.back()) {
            ++overflow_;
            return;
        }
        // right edge belongs to the last bin
        auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
        std::size_t bin = static_cast<std::size_t>(it - edges_.begin());
        bin = bin == 0 ? 0 : bin - 1;
        if (bin >= counts_.size()) bin = counts_.size() - 1;
        ++counts_[bin];
        ++in_range_;
    }

    void add(std::span<const double> xs) {
        for (double x : xs) add(x);
    }

    std::size_t bins() const { return counts_.size(); }
    const std::vector<double>& edges() const { return edges_; }
    const std::vector<std::size_t>& counts() const { return counts_; }
    double left(std::size_t i) const { return edges_[i]; }
    double right(std::size_t i) const { return edges_[i + 1]; }
    double width(std::size_t i) const { return edges_[i + 1] - edges_[i]; }
    std::size_t in_range() const { return in_range_; }
    std::size_t underflow() const { return underflow_; }
    std::size_t overflow() const { return overflow_; }

    double density(std::size_t i) const {
        if (in_range_ == 0) return 0.0;
        return static_cast<double>(counts_[i]) / (static_cast<double>(in_range_) * width(i));
    }

    std::vector<double> densities() const {
        std::vector<double> d(bins());
        for (std::size_t i = 0; i < bins(); ++i) d[i] = density(i);
        return d;
    }

private:
    std::vector<double> edges_;
    std::vector<std::size_t> counts_;
    std::size_t in_range_ = 0, underflow_ = 0, overflow_ = 0;
};

/// Cell averages of an analytic density over the histogram bins.
template <class F>
std::vector<double> cell_averages(const Histogram& h, F&& density) {
    std::vector<double> out(h.bins());
    for (std::size_t i = 0; i < h.bins(); ++i) {
        auto r = quad::integrate(density, h.left(i), h.right(i), 1e-12, 1e-10, 1e-6);
        out[i] = r.value / h.width(i);
    }
    return out;
}

/// L1 distance between two piecewise-constant densities on the same bins.
inline double l1_distance(const Histogram& h, std::span<const double> a,
                          std::span<const double> b) {
    if (a.size() != h.bins() || b.size() != h.bins())
        throw ConfigError("l1_distance: tabulations must match the histogram bins");
    double d = 0.0;
    for (std::size_t i = 0; i < h.bins(); ++i) d += std::abs(a[i] - b[i]) * h.width(i);
    return d;
}

/// L1 distance between the empirical density and an analytic density of
/// total mass `total_mass`: the binned part plus the analytic mass outside
/// the histogram support. Range [0, 2] for probability densities.
template <class F>
double l1_density_distance(const Histogram& h, F&& density, double total_mass = 1.0) {
    const auto avg = cell_averages(h, density);
    const auto emp = h.densities();
    double inside = 0.0;
    for (std::size_t i = 0; i < h.bins(); ++i) inside += avg[i] * h.width(i);
    return l1_distance(h, emp, avg) + std::max(0.0, total_mass - inside);
}

/// Hill estimate of the CCDF tail exponent from the k largest samples:
/// k / sum_i log(x_(n-i+1) / x_(n-k)).
inline double hill_tail_index_sorted(std::span<const double> sorted, std::size_t k) {
    const std::size_t n = sorted.size();
    if (k < 10 || k >= n) {
        std::ostringstream os;
        os << "hill_tail_index: k = " << k << " must satisfy 10 <= k < n = " << n;
        throw ConfigError(os.str());
    }
    if (!(sorted.front() > 0.0)) throw DomainError("hill_tail_index: samples must be positive");
    const double threshold = sorted[n - k - 1];
    double sum = 0.0;
    for (std::size_t i = n - k; i < n; ++i) sum += std::log(sorted[i] / threshold);
    if (!(sum > 0.0)) throw DomainError("hill_tail_index: degenerate tail (tied order statistics)");
    return static_cast<double>(k) / sum;
}

inline double hill_tail_index(std::span<const double> samples, std::size_t k) {
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    return hill_tail_index_sorted(s, k);
}

struct HillPoint {
    std::size_t k;
    double estimate;
};

struct HillScan {
    std::vector<HillPoint> points;
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;

    /// (max - min) / median over the scan.
    double relative_spread() const { return (max - min) / median; }
};

/// Hill estimates for k between frac_lo * n and frac_hi * n (inclusive),
/// `n_points` evenly spaced values of k.
inline HillScan hill_scan(std::span<const double> samples, double frac_lo, double frac_hi,
                          std::size_t n_points = 25) {
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    const auto k_lo = static_cast<std::size_t>(std::max(10.0, std::floor(frac_lo * n)));
    const auto k_hi = static_cast<std::size_t>(std::max(static_cast<double>(k_lo), std::floor(frac_hi * n)));
    HillScan scan;
    n_points = std::max<std::size_t>(n_points, 2);
    for (std::size_t j = 0; j < n_points; ++j) {
        const auto k = k_lo + (k_hi - k_lo) * j / (n_points - 1);
        if (!scan.points.empty() && scan.points.back().k == k) continue;
        scan.points.push_back({k, hill_tail_index_sorted(s, k)});
    }
    std::vector<double> est;
    for (auto& p : scan.points) est.push_back(p.estimate);
    std::sort(est.begin(), est.end());
    const std::size_t m = est.size();
    scan.median = m % 2 ? est[m / 2] : 0.5 * (est[m / 2 - 1] + est[m / 2]);
    scan.min = est.front();
    scan.max = est.back();
    return scan;
}

/// Plateau detector: a power tail gives Hill estimates that stay within
/// `max_relative_spread` of their median across the scan.
inline bool has_power_tail(const HillScan& scan, double max_relative_spread = 0.3) {
    return scan.relative_spread() <= max_relative_spread;
}

/// p-th raw moment, p in {1, 2, 3}.
inline double moment(std::span<const double> samples, int p) {
    if (p < 1 || p > 3) throw ConfigError("moment: p must be 1, 2 or 3");
    if (samples.empty()) throw DomainError("moment: no samples");
    double acc = 0.0;
    for (double x : samples) acc += p == 1 ? x : p == 2 ? x * x : x * x * x;
    return acc / static_cast<double>(samples.size());
}

struct LognormalFit {
    double log_mean;
    double log_variance;
};

/// Moment matching on log-samples (population variance).
inline LognormalFit lognormal_fit(std::span<const double> samples) {
    if (samples.empty()) throw DomainError("lognormal_fit: no samples");
    double mean = 0.0;
    for (double x : samples) {
        if (!(x > 0.0)) throw DomainError("lognormal_fit: samples must be positive");
        mean += std::log(x);
    }
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double x : samples) {
        const double d = std::log(x) - mean;
        var += d * d;
    }
    return {mean, var / static_cast<double>(samples.size())};
}

/// Kolmogorov-Smirnov statistic sup |F_n - F|.
template <class Cdf>
double ks_statistic(std::span<const double> samples, Cdf&& cdf) {
    if (samples.empty()) throw DomainError("ks_statistic: no samples");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double F = cdf(s[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    return d;
}

} // namespace kinmarket::stats
