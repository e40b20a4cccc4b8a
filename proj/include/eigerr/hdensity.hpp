#pragma once

// Ensemble density of h_hat at a fixed eigenvalue when the two neighbouring
// gaps follow the joint GOE surmise J(s-, s+):
//
//   f_H(h) = -int_{s0(h)}^inf J(s*(h,s+), s+) ds*/dh ds+
//   F_H(h) =  int_{s0(h)}^inf int_{s*(h,s+)}^inf J(s-, s+) ds- ds+
//
// s0(h) solves lambda^2/s^2 + a lambda^2/s = h (a = p rho), and s*(h, s+) is
// the left gap that puts h_hat(s*, s+) exactly at h. Also the large-h tail
// verifier, f_H ~ h^-7/2 I(h) with I(h) = O(h^3/2 / p^3).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "eigerr/csv.hpp"
#include "eigerr/error.hpp"
#include "eigerr/estimators.hpp"
#include "eigerr/quadrature.hpp"
#include "eigerr/spectral.hpp"

namespace eigerr {

struct HDensityParams {
    double lambda = 0.0;
    std::size_t p = 0;
    double rho = 0.0;
    double a = 0.0;  // p * rho, inverse mean spacing

    HDensityParams(double lambda_, std::size_t p_, double rho_)
        : lambda(lambda_), p(p_), rho(rho_), a(static_cast<double>(p_) * rho_) {
        require(lambda > 0.0, "HDensityParams: lambda must be positive");
        require(a > 0.0 && std::isfinite(a), "HDensityParams: p*rho must be positive");
    }

    // (lambda * p * rho)^2, the natural scale of h
    double h_scale() const { return lambda * lambda * a * a; }
};

namespace detail {

// positive root of D s^2 - a lambda^2 s - lambda^2 = 0, valid for a = 0 too
inline double positive_root(double d, const HDensityParams& q) {
    const double l2 = q.lambda * q.lambda;
    return (q.a * l2 + std::sqrt(q.a * q.a * l2 * l2 + 4.0 * d * l2)) / (2.0 * d);
}

inline double residual_budget(double h, double s_plus, const HDensityParams& q) {
    const double l2 = q.lambda * q.lambda;
    return h - l2 / (s_plus * s_plus) - q.a * l2 / s_plus;
}

}  // namespace detail

inline double s0(double h, const HDensityParams& q) {
    require(h > 0.0, "s0: h must be positive");
    return detail::positive_root(h, q);
}

inline double s_star(double h, double s_plus, const HDensityParams& q) {
    require(h > 0.0 && s_plus > 0.0, "s_star: h and s+ must be positive");
    const double d = detail::residual_budget(h, s_plus, q);
    if (!(d > 0.0)) throw config_error("s_star: s+ must exceed s0(h)");
    return detail::positive_root(d, q);
}

// d s*/dh = -s*^2 / sqrt(a^2 lambda^4 + 4 D lambda^2)
inline double ds_star_dh(double h, double s_plus, const HDensityParams& q) {
    require(h > 0.0 && s_plus > 0.0, "ds_star_dh: h and s+ must be positive");
    const double d = detail::residual_budget(h, s_plus, q);
    if (!(d > 0.0)) throw config_error("ds_star_dh: s+ must exceed s0(h)");
    const double s = detail::positive_root(d, q);
    const double l2 = q.lambda * q.lambda;
    return -s * s / std::sqrt(q.a * q.a * l2 * l2 + 4.0 * d * l2);
}

struct HDensityOptions {
    QuadratureOptions quad{1e-300, 1e-10, 4000};
    double gaussian_cutoff = 10.0;  // upper gap limit, in units of 1/(p rho)
};

// The integrand of f_H is symmetric under swapping the gaps, so the piece with
// s+ below the symmetric point s_m (where s* > s_m, up to s* -> inf at s0) is
// the mirror image of the piece above it. Integrating 2 x [s_m, inf) keeps s*
// bounded; in t = ln s+ the multi-scale structure at large h is resolved.
inline double f_H(double h, const HDensityParams& q, const HDensityOptions& opt = {}) {
    require(h > 0.0, "f_H: h must be positive");
    const double scale = q.h_scale();
    const double s_mid = s0(0.5 * h, q);
    const double s_hi = s_mid + opt.gaussian_cutoff / q.a;

    auto integrand = [&](double t) {
        const double sp = std::exp(t);
        const double d = detail::residual_budget(h, sp, q);
        if (!(d > 0.0)) return 0.0;
        const double sm = detail::positive_root(d, q);
        const double l2 = q.lambda * q.lambda;
        const double slope = sm * sm / std::sqrt(q.a * q.a * l2 * l2 + 4.0 * d * l2);
        const double log_val = log_joint_gap_pdf(sm, sp, q.a) + std::log(slope) + t + std::log(scale);
        return std::exp(log_val);
    };

    std::vector<double> breaks{std::log(s_mid)};
    const double mean_gap = 1.0 / q.a;
    if (mean_gap > 2.0 * s_mid && mean_gap < s_hi) breaks.push_back(std::log(mean_gap));
    breaks.push_back(std::log(s_hi));
    return 2.0 * integrate_pieces(integrand, breaks, opt.quad).value / scale;
}

// Probability that h_hat < h: the J-measure of {s+ > s0(h), s- > s*(h, s+)}.
inline double F_H(double h, const HDensityParams& q, const HDensityOptions& opt = {}) {
    require(h > 0.0, "F_H: h must be positive");
    const double lower = s0(h, q);
    const double cutoff = opt.gaussian_cutoff / q.a;
    QuadratureOptions inner_opt = opt.quad;
    inner_opt.rel_tol = std::max(opt.quad.rel_tol, 1e-11);

    auto inner = [&](double sp) {
        const double d = detail::residual_budget(h, sp, q);
        if (!(d > 0.0)) return 0.0;
        const double sm_lo = detail::positive_root(d, q);
        if (sm_lo > 3.0 * cutoff) return 0.0;  // J < e^-600 there
        auto j = [&](double sm) { return joint_gap_pdf(sm, sp, q.a); };
        return integrate(j, sm_lo, sm_lo + cutoff, inner_opt).value;
    };
    // s+ = lower + e^t resolves the steep rise just above s0(h)
    const double u_lo = 1e-14 * (lower + cutoff);
    auto outer = [&](double t) {
        const double u = std::exp(t);
        return inner(lower + u) * u;
    };
    std::vector<double> breaks{std::log(u_lo)};
    if (lower > 1e-12 * cutoff && lower < cutoff) breaks.push_back(std::log(lower));
    breaks.push_back(std::log(cutoff));
    return integrate_pieces(outer, breaks, opt.quad).value;
}

// CSV `h,f_H,F_H` on the given grid.
inline void write_hdensity_csv(const std::string& path, const HDensityParams& q, std::span<const double> h_grid) {
    CsvWriter csv(path, {"h", "f_H", "F_H"});
    for (double h : h_grid) csv.row() << h << f_H(h, q) << F_H(h, q);
}

inline std::vector<double> geometric_grid(double lo, double hi, std::size_t points) {
    require(lo > 0.0 && hi > lo && points >= 2, "geometric_grid: need 0 < lo < hi and >= 2 points");
    std::vector<double> g(points);
    const double step = std::log(hi / lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) g[i] = lo * std::exp(step * static_cast<double>(i));
    g.back() = hi;
    return g;
}

// ---------------------------------------------------------------------------
// Large-h tail

namespace tail {

// (3 p rho)^2 / (4 pi): the Gaussian rate of J
inline double gaussian_rate(const HDensityParams& q) { return 9.0 * q.a * q.a / (4.0 * std::numbers::pi); }

// Exponent after the substitution u = (s+)^2 h - lambda^2, scaled by h.
inline double phi(double u, const HDensityParams& q) {
    require(u > 0.0, "phi: u must be positive");
    const double l = q.lambda;
    return gaussian_rate(q) * (u + l * l) * (1.0 + l / std::sqrt(u) + l * l / u);
}

// min_u phi(u) = phi(lambda^2) = (27 / 2 pi) (lambda p rho)^2
inline double h_min_scale(const HDensityParams& q) { return 27.0 / (2.0 * std::numbers::pi) * q.h_scale(); }

inline double u1_asymptote(double h, const HDensityParams& q) {
    const double l2 = q.lambda * q.lambda;
    return gaussian_rate(q) * l2 * l2 / h;
}

inline double u2_asymptote(double h, const HDensityParams& q) { return h / gaussian_rate(q); }

// I(h) = int_0^inf (1 + lambda^2/u)^(5/2) (sqrt(u) + lambda) exp(-phi(u)/h) du
inline double tail_integral(double h, const HDensityParams& q) {
    require(h > 0.0, "tail_integral: h must be positive");
    const double l = q.lambda;
    auto integrand = [&](double t) {
        const double u = std::exp(t);
        const double e = phi(u, q) / h;
        if (e > 745.0) return 0.0;
        return std::pow(1.0 + l * l / u, 2.5) * (std::sqrt(u) + l) * std::exp(-e) * u;
    };
    // beyond these the exponent exceeds ~800
    const double c = gaussian_rate(q);
    const double u_lo = c * l * l * l * l / (800.0 * h);
    const double u_hi = 800.0 * h / c;
    std::vector<double> breaks{std::log(u_lo)};
    for (double b : {u1_asymptote(h, q), l * l, u2_asymptote(h, q)})
        if (b > u_lo && b < u_hi && std::log(b) > breaks.back()) breaks.push_back(std::log(b));
    breaks.push_back(std::log(u_hi));
    return integrate_pieces(integrand, breaks, {1e-300, 1e-10, 4000}).value;
}

// f_H ~ (3^7 (p rho)^5 / 32 pi^3) (lambda^2 / 4) h^(-7/2) I(h) for large h
inline double f_H_asymptotic(double h, const HDensityParams& q) {
    const double norm = std::pow(3.0, 7) * std::pow(q.a, 5) / (32.0 * std::pow(std::numbers::pi, 3));
    return norm * q.lambda * q.lambda / 4.0 * std::pow(h, -3.5) * tail_integral(h, q);
}

}  // namespace tail

struct TailReport {
    double fitted_slope = 0.0;
    double h_lo = 0.0;
    double h_hi = 0.0;
    double plateau_ratio_spread = 0.0;  // max/min - 1 of I(h) p^3 / h^(3/2)
    double u1_relative_error = 0.0;     // |phi(u1)/h - 1| at h_hi
    double u2_relative_error = 0.0;
    double asymptotic_ratio = 0.0;      // f_H / f_H_asymptotic at h_hi
    std::vector<double> h;
    std::vector<double> f;
    std::vector<double> plateau;
};

inline TailReport tail_report(const HDensityParams& q, std::span<const double> h_grid) {
    require(h_grid.size() >= 3, "tail_report: grid needs at least 3 points");
    for (std::size_t i = 1; i < h_grid.size(); ++i) require(h_grid[i] > h_grid[i - 1], "tail_report: grid must ascend");
    const double lo = h_grid.front(), hi = h_grid.back();
    require(hi / lo >= 100.0 * (1.0 - 1e-12), "tail_report: grid must span at least two decades");
    require(lo >= 100.0 * tail::h_min_scale(q) * (1.0 - 1e-12),
            "tail_report: grid must start at >= 100 (27/2pi)(lambda p rho)^2");

    TailReport r;
    r.h_lo = lo;
    r.h_hi = hi;
    const double p3 = std::pow(static_cast<double>(q.p), 3);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double h : h_grid) {
        const double f = f_H(h, q);
        if (!(f > 0.0)) throw numeric_error("tail_report: f_H underflowed at h = " + format_double(h));
        r.h.push_back(h);
        r.f.push_back(f);
        r.plateau.push_back(tail::tail_integral(h, q) * p3 / std::pow(h, 1.5));
        const double x = std::log(h), y = std::log(f);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(h_grid.size());
    r.fitted_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const auto [mn, mx] = std::minmax_element(r.plateau.begin(), r.plateau.end());
    r.plateau_ratio_spread = *mx / *mn - 1.0;
    r.u1_relative_error = std::abs(tail::phi(tail::u1_asymptote(hi, q), q) / hi - 1.0);
    r.u2_relative_error = std::abs(tail::phi(tail::u2_asymptote(hi, q), q) / hi - 1.0);
    r.asymptotic_ratio = r.f.back() / tail::f_H_asymptotic(hi, q);
    return r;
}

// Default window [1e2, 1e4] x (27/2pi)(lambda p rho)^2.
inline std::vector<double> default_tail_grid(const HDensityParams& q, std::size_t points = 21) {
    const double base = tail::h_min_scale(q);
    return geometric_grid(1e2 * base, 1e4 * base, points);
}

}  // namespace eigerr
