#pragma once

// Symmetric eigensolver, bulk spectral densities (McKay and ensemble
// histogram), eigengap extraction, and the GOE surmise densities.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "eigerr/csv.hpp"
#include "eigerr/error.hpp"
#include "eigerr/quadrature.hpp"

namespace eigerr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct EigenDecomposition {
    Vector values;   // ascending
    Matrix vectors;  // orthonormal columns, vectors.col(i) pairs with values(i)
};

namespace detail {

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline void check_symmetric(const Matrix& m, const char* who) {
    require(m.rows() == m.cols(), std::string(who) + ": matrix must be square");
    const double scale = max_abs(m);
    const double asym = m.size() == 0 ? 0.0 : (m - m.transpose()).cwiseAbs().maxCoeff();
    require(asym <= 1e-10 * scale, std::string(who) + ": matrix is not symmetric");
}

}  // namespace detail

inline EigenDecomposition eig_sym(const Matrix& m) {
    detail::check_symmetric(m, "eig_sym");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw numeric_error("eig_sym: eigensolver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

// Eigenvalues only; skips the eigenvector accumulation.
inline Vector eigenvalues_sym(const Matrix& m) {
    detail::check_symmetric(m, "eigenvalues_sym");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw numeric_error("eigenvalues_sym: eigensolver did not converge");
    return solver.eigenvalues();
}

// ---------------------------------------------------------------------------
// Spectral densities

// Kesten-McKay law for the adjacency spectrum of a k-regular graph, evaluated
// at (lambda - shift). With shift = k it is the bulk law of the Laplacian k*I - A.
inline double mckay_density(double lambda, int k, double shift) {
    require(k >= 2, "mckay_density: k must be >= 2");
    const double x = lambda - shift;
    const double edge = 2.0 * std::sqrt(k - 1.0);
    if (std::abs(x) >= edge) return 0.0;
    const double kk = static_cast<double>(k);
    return kk * std::sqrt(4.0 * (kk - 1.0) - x * x) / (2.0 * std::numbers::pi * (kk * kk - x * x));
}

struct McKayDensity {
    int k = 20;
    double shift = 20.0;

    double operator()(double lambda) const { return mckay_density(lambda, k, shift); }
    double lower() const { return shift - 2.0 * std::sqrt(k - 1.0); }
    double upper() const { return shift + 2.0 * std::sqrt(k - 1.0); }
};

// Histogram values at bin centers, linearly interpolated, with a zero node one
// bin beyond each end. The trapezoid integral of that interpolant is exactly
// bin_width * sum(values) = 1.
struct EmpiricalDensity {
    double first_center = 0.0;
    double bin_width = 1.0;
    std::vector<double> values;

    double operator()(double lambda) const {
        const double pos = (lambda - first_center) / bin_width;  // node j sits at pos == j
        if (!(pos > -1.0) || !(pos < static_cast<double>(values.size()))) return 0.0;
        const double fl = std::floor(pos);
        const auto j = static_cast<long>(fl);
        const double t = pos - fl;
        const auto n = static_cast<long>(values.size());
        const double left = j >= 0 ? values[j] : 0.0;
        const double right = j + 1 < n ? values[j + 1] : 0.0;
        return (1.0 - t) * left + t * right;
    }
    double lower() const { return first_center - bin_width; }
    double upper() const { return first_center + bin_width * static_cast<double>(values.size()); }
};

class SpectralDensity {
public:
    SpectralDensity(McKayDensity d) : impl_(d) {}
    SpectralDensity(EmpiricalDensity d) : impl_(std::move(d)) {}

    static SpectralDensity mckay(int k, std::optional<double> shift = std::nullopt) {
        require(k >= 2, "SpectralDensity::mckay: k must be >= 2");
        return McKayDensity{k, shift.value_or(static_cast<double>(k))};
    }

    double operator()(double lambda) const {
        return std::visit([&](const auto& d) { return d(lambda); }, impl_);
    }
    double lower() const {
        return std::visit([](const auto& d) { return d.lower(); }, impl_);
    }
    double upper() const {
        return std::visit([](const auto& d) { return d.upper(); }, impl_);
    }
    bool is_empirical() const { return std::holds_alternative<EmpiricalDensity>(impl_); }
    const EmpiricalDensity* empirical() const { return std::get_if<EmpiricalDensity>(&impl_); }
    const McKayDensity* analytic() const { return std::get_if<McKayDensity>(&impl_); }

private:
    std::variant<McKayDensity, EmpiricalDensity> impl_;
};

// Freedman-Diaconis width 2 * IQR * n^(-1/3) with linear-interpolated
// quartiles. Falls back to range / sqrt(n), then to 1, for degenerate samples.
inline double freedman_diaconis_width(std::vector<double> sample) {
    require(!sample.empty(), "freedman_diaconis_width: empty sample");
    std::sort(sample.begin(), sample.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(sample.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, sample.size() - 1);
        return sample[lo] + (pos - static_cast<double>(lo)) * (sample[hi] - sample[lo]);
    };
    const double n = static_cast<double>(sample.size());
    const double iqr = quantile(0.75) - quantile(0.25);
    if (iqr > 0.0) return 2.0 * iqr / std::cbrt(n);
    const double range = sample.back() - sample.front();
    if (range > 0.0) return range / std::sqrt(n);
    return 1.0;
}

// Average of the per-matrix normalized histograms over a common bin grid.
// bin_width defaults to Freedman-Diaconis on the pooled sample.
inline EmpiricalDensity estimate_density(std::span<const std::vector<double>> pools,
                                         std::optional<double> bin_width = std::nullopt) {
    std::vector<double> pooled;
    std::size_t nonempty = 0;
    for (const auto& pool : pools) {
        pooled.insert(pooled.end(), pool.begin(), pool.end());
        if (!pool.empty()) ++nonempty;
    }
    require(!pooled.empty(), "estimate_density: empty eigenvalue pool");
    const double width = bin_width.value_or(freedman_diaconis_width(pooled));
    require(width > 0.0 && std::isfinite(width), "estimate_density: bin width must be positive");

    const auto [mn, mx] = std::minmax_element(pooled.begin(), pooled.end());
    const double lo = *mn;
    const auto bins = static_cast<std::size_t>(std::floor((*mx - lo) / width)) + 1;

    EmpiricalDensity out{lo + 0.5 * width, width, std::vector<double>(bins, 0.0)};
    for (const auto& pool : pools) {
        if (pool.empty()) continue;
        const double w = 1.0 / (static_cast<double>(pool.size()) * width * static_cast<double>(nonempty));
        for (double v : pool) {
            auto b = static_cast<std::size_t>(std::floor((v - lo) / width));
            out.values[std::min(b, bins - 1)] += w;
        }
    }
    return out;
}

inline EmpiricalDensity estimate_density(const std::vector<std::vector<double>>& pools,
                                         std::optional<double> bin_width = std::nullopt) {
    return estimate_density(std::span<const std::vector<double>>(pools), bin_width);
}

// CSV `lambda,rho` on n uniform points spanning [lo, hi].
inline void write_density_csv(const std::string& path, const SpectralDensity& rho, double lo, double hi,
                              std::size_t points) {
    require(points >= 2 && hi > lo, "write_density_csv: need >= 2 points on a nonempty interval");
    CsvWriter csv(path, {"lambda", "rho"});
    for (std::size_t i = 0; i < points; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        csv.row() << x << rho(x);
    }
}

// ---------------------------------------------------------------------------
// Eigengaps

struct GapRecord {
    std::size_t index = 0;  // 0-based position in the ascending spectrum
    double lambda = 0.0;
    double s_minus = 0.0;
    double s_plus = 0.0;
};

// Records for interior indices with |lambda_i - center| < half_width. The two
// extreme eigenvalues have only one neighbour and are never reported.
inline std::vector<GapRecord> extract_gap_records(std::span<const double> eigenvalues, double center,
                                                  double half_width) {
    require(half_width > 0.0, "extract_gap_records: half-width must be positive");
    for (std::size_t i = 1; i < eigenvalues.size(); ++i)
        require(eigenvalues[i] > eigenvalues[i - 1],
                "extract_gap_records: eigenvalues must be strictly ascending (tie or disorder at index " +
                    std::to_string(i) + ")");
    std::vector<GapRecord> out;
    for (std::size_t i = 1; i + 1 < eigenvalues.size(); ++i) {
        if (std::abs(eigenvalues[i] - center) < half_width)
            out.push_back({i, eigenvalues[i], eigenvalues[i] - eigenvalues[i - 1], eigenvalues[i + 1] - eigenvalues[i]});
    }
    return out;
}

inline std::vector<GapRecord> extract_gap_records(const Vector& eigenvalues, double center, double half_width) {
    return extract_gap_records(std::span<const double>(eigenvalues.data(), static_cast<std::size_t>(eigenvalues.size())),
                               center, half_width);
}

inline void write_gaps_csv(const std::string& path, std::span<const GapRecord> records) {
    CsvWriter csv(path, {"index", "lambda", "s_minus", "s_plus"});
    for (const auto& r : records) csv.row() << r.index << r.lambda << r.s_minus << r.s_plus;
}

// ---------------------------------------------------------------------------
// Surmises. `p_rho` is the product p * rho(lambda), the inverse mean spacing.

// Wigner surmise for a single GOE spacing.
inline double wigner_surmise_pdf(double s, double p_rho) {
    require(p_rho > 0.0, "wigner_surmise_pdf: p*rho must be positive");
    if (s <= 0.0) return 0.0;
    const double a2 = p_rho * p_rho;
    return 0.5 * std::numbers::pi * a2 * s * std::exp(-0.25 * std::numbers::pi * a2 * s * s);
}

inline double wigner_surmise_cdf(double s, double p_rho) {
    require(p_rho > 0.0, "wigner_surmise_cdf: p*rho must be positive");
    if (s <= 0.0) return 0.0;
    return -std::expm1(-0.25 * std::numbers::pi * p_rho * p_rho * s * s);
}

inline double wigner_surmise_pdf(double s, std::size_t p, double rho) {
    return wigner_surmise_pdf(s, static_cast<double>(p) * rho);
}

// log J(s-, s+) for the 3x3-GOE joint spacing surmise; -inf when either gap is 0.
inline double log_joint_gap_pdf(double s_minus, double s_plus, double p_rho) {
    require(p_rho > 0.0, "joint_gap_pdf: p*rho must be positive");
    if (s_minus <= 0.0 || s_plus <= 0.0) return -INFINITY;
    constexpr double pi = std::numbers::pi;
    const double log_norm = 7.0 * std::log(3.0) + 5.0 * std::log(p_rho) - std::log(32.0) - 3.0 * std::log(pi);
    const double c = 9.0 * p_rho * p_rho / (4.0 * pi);
    return log_norm + std::log(s_minus) + std::log(s_plus) + std::log(s_minus + s_plus) -
           c * (s_plus * s_plus + s_minus * s_minus + s_plus * s_minus);
}

inline double joint_gap_pdf(double s_minus, double s_plus, double p_rho) {
    return std::exp(log_joint_gap_pdf(s_minus, s_plus, p_rho));
}

inline double joint_gap_pdf(double s_minus, double s_plus, std::size_t p, double rho) {
    return joint_gap_pdf(s_minus, s_plus, static_cast<double>(p) * rho);
}

// Binned L1 distance between observed (s-, s+) pairs and J. Cells are squares
// of side `cell` in the normalized gap x = p rho s, covering [0, bins*cell)^2;
// everything else is one overflow cell. Model cell masses come from nested
// quadrature of J.
inline double joint_gap_l1(std::span<const std::pair<double, double>> gaps, double p_rho, std::size_t bins,
                           double cell) {
    require(!gaps.empty() && bins >= 1 && cell > 0.0, "joint_gap_l1: need gaps, bins >= 1, cell > 0");
    std::vector<double> counts(bins * bins, 0.0);
    double overflow = 0.0;
    for (auto [sm, sp] : gaps) {
        const double xm = p_rho * sm / cell, xp = p_rho * sp / cell;
        if (xm >= 0.0 && xp >= 0.0 && xm < static_cast<double>(bins) && xp < static_cast<double>(bins))
            counts[static_cast<std::size_t>(xm) * bins + static_cast<std::size_t>(xp)] += 1.0;
        else
            overflow += 1.0;
    }
    // J in normalized units: j(x, y) = J(x/a, y/a) / a^2
    auto j = [&](double x, double y) { return joint_gap_pdf(x / p_rho, y / p_rho, p_rho) / (p_rho * p_rho); };
    const double n = static_cast<double>(gaps.size());
    double inside = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < bins; ++i)
        for (std::size_t k = 0; k < bins; ++k) {
            const double x0 = cell * static_cast<double>(i), y0 = cell * static_cast<double>(k);
            auto row = [&](double x) { return integrate([&](double y) { return j(x, y); }, y0, y0 + cell).value; };
            const double mass = integrate(row, x0, x0 + cell).value;
            inside += mass;
            l1 += std::abs(counts[i * bins + k] / n - mass);
        }
    return l1 + std::abs(overflow / n - std::max(0.0, 1.0 - inside));
}

}  // namespace eigerr
