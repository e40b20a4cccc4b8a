#pragma once

// Goodness-of-fit helpers shared by the experiments and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "eigerr/error.hpp"

namespace eigerr {

inline double median(std::vector<double> v) {
    require(!v.empty(), "median: empty sample");
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<long>(mid)));
}

inline double quantile(std::vector<double> v, double q) {
    require(!v.empty() && q >= 0.0 && q <= 1.0, "quantile: empty sample or q outside [0,1]");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, "pearson: need two samples of equal size >= 2");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

// sup |F_n - F| against a continuous model CDF.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
    require(!sample.empty(), "ks_statistic: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

inline double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b) {
    require(!a.empty() && !b.empty(), "ks_two_sample_statistic: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

// Asymptotic Kolmogorov tail Q(z) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 z^2).
inline double kolmogorov_survival(double z) {
    if (z < 0.27) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * z * z);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

// Two-sample KS p-value with the Stephens small-sample correction.
inline double ks_two_sample_pvalue(const std::vector<double>& a, const std::vector<double>& b) {
    const double d = ks_two_sample_statistic(a, b);
    const double ne = static_cast<double>(a.size()) * static_cast<double>(b.size()) /
                      static_cast<double>(a.size() + b.size());
    const double sq = std::sqrt(ne);
    return kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d);
}

// Binned L1 distance sum_b |p_b - q_b| between a sample and a model given by
// its CDF. Mass outside [edges.front(), edges.back()] counts as two extra cells.
inline double binned_l1(std::span<const double> sample, std::span<const double> edges,
                        const std::function<double(double)>& cdf) {
    require(!sample.empty() && edges.size() >= 2, "binned_l1: need a sample and >= 2 edges");
    const std::size_t bins = edges.size() - 1;
    std::vector<double> counts(bins + 2, 0.0);  // [under, bins..., over]
    for (double x : sample) {
        if (x < edges.front()) {
            counts.front() += 1;
        } else if (x >= edges.back()) {
            counts.back() += 1;
        } else {
            const auto it = std::upper_bound(edges.begin(), edges.end(), x);
            counts[static_cast<std::size_t>(it - edges.begin())] += 1;
        }
    }
    const double n = static_cast<double>(sample.size());
    std::vector<double> cdf_at(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) cdf_at[i] = cdf(edges[i]);
    double l1 = std::abs(counts.front() / n - cdf_at.front()) + std::abs(counts.back() / n - (1.0 - cdf_at.back()));
    for (std::size_t b = 0; b < bins; ++b) l1 += std::abs(counts[b + 1] / n - (cdf_at[b + 1] - cdf_at[b]));
    return l1;
}

}  // namespace eigerr

namespace eigerr {

// int_lo^hi |f - g| by the trapezoid rule on `points` uniform nodes.
inline double l1_distance(const std::function<double(double)>& f, const std::function<double(double)>& g, double lo,
                          double hi, std::size_t points = 20001) {
    require(hi > lo && points >= 2, "l1_distance: need hi > lo and >= 2 points");
    const double step = (hi - lo) / static_cast<double>(points - 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        const double x = lo + step * static_cast<double>(i);
        const double w = (i == 0 || i + 1 == points) ? 0.5 : 1.0;
        sum += w * std::abs(f(x) - g(x));
    }
    return sum * step;
}

}  // namespace eigerr
