#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.
// Intervals are bisected in order of largest error estimate until
// err <= max(abs_tol, rel_tol * |I|).

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

#include "eigerr/error.hpp"

namespace eigerr {

struct QuadratureOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_intervals = 4000;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double s = f(center - dx) + f(center + dx);
        kronrod += kWgk[j] * s;
        if (j % 2 == 1) gauss += kWg[j / 2] * s;
    }
    kronrod *= half;
    gauss *= half;
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
    if (a == b) return {};
    if (!(std::isfinite(a) && std::isfinite(b)))
        throw config_error("integrate: interval endpoints must be finite");
    if (b < a) {
        auto r = integrate(f, b, a, opt);
        r.value = -r.value;
        return r;
    }
    std::priority_queue<detail::Segment> heap;
    auto first = detail::gk15(f, a, b);
    double total = first.value;
    double error = first.error;
    heap.push(first);
    int count = 1;
    while (error > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
        if (count >= opt.max_intervals)
            throw numeric_error("integrate: no convergence on [" + std::to_string(a) + ", " +
                                std::to_string(b) + "], error estimate " + std::to_string(error));
        auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // interval collapsed to adjacent doubles; keep its contribution as is
            heap.push({worst.a, worst.b, worst.value, 0.0});
            error -= worst.error;
            continue;
        }
        auto left = detail::gk15(f, worst.a, mid);
        auto right = detail::gk15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++count;
    }
    // re-sum to shed the drift from incremental updates
    double sum = 0.0, err = 0.0;
    while (!heap.empty()) {
        sum += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    return {sum, err, count};
}

// Integrates over consecutive breakpoints [x0,x1], [x1,x2], ...
template <class F>
QuadratureResult integrate_pieces(F&& f, const std::vector<double>& breaks, const QuadratureOptions& opt = {}) {
    QuadratureResult out;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        auto r = integrate(f, breaks[i], breaks[i + 1], opt);
        out.value += r.value;
        out.error += r.error;
        out.intervals += r.intervals;
    }
    return out;
}

}  // namespace eigerr
