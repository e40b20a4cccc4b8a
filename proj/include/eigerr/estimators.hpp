#pragma once

// Eigenvector error predictors: the exact sensitivity sum h_i, its
// nearest-gap estimate h_hat, aligned residuals and their bootstrap means.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eigerr/csv.hpp"
#include "eigerr/error.hpp"
#include "eigerr/graph.hpp"
#include "eigerr/parallel.hpp"
#include "eigerr/rng.hpp"
#include "eigerr/spectral.hpp"
#include "eigerr/wishart.hpp"

namespace eigerr {

// ---------------------------------------------------------------------------
// h_i = sum_{j != i} lambda_i lambda_j / (lambda_i - lambda_j)^2

inline double h_exact(std::span<const double> eigenvalues, std::size_t i) {
    require(i < eigenvalues.size(), "h_exact: index out of range");
    const double li = eigenvalues[i];
    double sum = 0.0;
    for (std::size_t j = 0; j < eigenvalues.size(); ++j) {
        if (j == i) continue;
        const double d = li - eigenvalues[j];
        if (d == 0.0) throw config_error("h_exact: tied eigenvalues at indices " + std::to_string(i) + ", " + std::to_string(j));
        sum += li * eigenvalues[j] / (d * d);
    }
    return sum;
}

inline std::vector<double> h_exact_all(std::span<const double> eigenvalues) {
    for (std::size_t i = 1; i < eigenvalues.size(); ++i)
        require(eigenvalues[i] > eigenvalues[i - 1], "h_exact: eigenvalues must be strictly ascending");
    std::vector<double> out(eigenvalues.size());
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) out[i] = h_exact(eigenvalues, i);
    return out;
}

inline std::span<const double> as_span(const Vector& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

// lambda^2 [ (1/s-^2 + 1/s+^2) + p rho (1/s- + 1/s+) ]; the second term is the
// far-field correction and is dropped when include_correction is false.
inline double h_hat(double lambda, double s_minus, double s_plus, double p_rho, bool include_correction = true) {
    require(s_minus > 0.0 && s_plus > 0.0, "h_hat: gaps must be positive");
    require(p_rho >= 0.0, "h_hat: p*rho must be nonnegative");
    const double l2 = lambda * lambda;
    double h = 1.0 / (s_minus * s_minus) + 1.0 / (s_plus * s_plus);
    if (include_correction) h += p_rho * (1.0 / s_minus + 1.0 / s_plus);
    return l2 * h;
}

struct HValue {
    std::size_t index = 0;
    double lambda = 0.0;
    std::optional<double> h_exact;
    std::optional<double> h_hat;
    std::optional<double> h_hat_uncorrected;
};

// h_exact for every interior index plus h_hat with rho read from the ensemble
// density at lambda_i.
inline std::vector<HValue> h_values(const Vector& eigenvalues, const SpectralDensity& rho) {
    const auto ev = as_span(eigenvalues);
    const auto exact = h_exact_all(ev);
    const double p = static_cast<double>(ev.size());
    std::vector<HValue> out;
    for (const auto& g : extract_gap_records(ev, 0.5 * (ev.front() + ev.back()), INFINITY)) {
        const double a = p * rho(g.lambda);
        out.push_back({g.index, g.lambda, exact[g.index], h_hat(g.lambda, g.s_minus, g.s_plus, a, true),
                       h_hat(g.lambda, g.s_minus, g.s_plus, a, false)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Residuals

// 2 (1 - |<u, u~>|): u~ is sign-flipped onto u before measuring.
template <class A, class B>
double aligned_residual(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& u_tilde) {
    require(u.size() == u_tilde.size(), "aligned_residual: size mismatch");
    require(std::abs(u.norm() - 1.0) <= 1e-8 && std::abs(u_tilde.norm() - 1.0) <= 1e-8,
            "aligned_residual: inputs must be unit vectors");
    const double r = 2.0 * (1.0 - std::abs(u.dot(u_tilde)));
    return std::clamp(r, 0.0, 2.0);
}

// Minimal admissible n for expected residual h/n not to exceed the bound 2.
inline double sample_size_bound(double h) { return 0.5 * h; }

inline bool regime_violation(double n, double h) { return n < sample_size_bound(h); }

// ---------------------------------------------------------------------------
// Bootstrap

struct BootstrapConfig {
    std::size_t replicates = 100;  // R
    std::uint64_t n = 10'000'000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    bool check_pairing = true;
};

struct BootstrapResult {
    Vector mean_n_residual;  // per index, n * mean aligned residual
    Vector std_n_residual;   // per index, sample std (0 when R = 1)
    Matrix residuals;        // R x p aligned residuals (not scaled by n)
    std::uint64_t n = 0;
    // replicates whose greedy |<u_i, u~_j>| matching differs from index order
    std::size_t pairing_mismatches = 0;
};

namespace detail {

// Greedy max-|overlap| matching is the identity iff every row's argmax lies on
// the diagonal; otherwise run the greedy pass and compare.
inline bool greedy_matching_is_identity(const Matrix& overlap_abs) {
    const Eigen::Index p = overlap_abs.rows();
    bool diagonal = true;
    for (Eigen::Index i = 0; i < p && diagonal; ++i) {
        Eigen::Index j;
        overlap_abs.row(i).maxCoeff(&j);
        diagonal = (j == i);
    }
    if (diagonal) return true;
    std::vector<std::pair<double, std::pair<Eigen::Index, Eigen::Index>>> entries;
    entries.reserve(static_cast<std::size_t>(p * p));
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) entries.push_back({overlap_abs(i, j), {i, j}});
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<char> row_used(static_cast<std::size_t>(p), 0), col_used(static_cast<std::size_t>(p), 0);
    for (const auto& [v, ij] : entries) {
        const auto [i, j] = ij;
        if (row_used[static_cast<std::size_t>(i)] || col_used[static_cast<std::size_t>(j)]) continue;
        if (i != j) return false;
        row_used[static_cast<std::size_t>(i)] = col_used[static_cast<std::size_t>(j)] = 1;
    }
    return true;
}

}  // namespace detail

// Residuals of one sample covariance against the population eigenvectors,
// paired by sorted index.
inline Vector replicate_residuals(const PopulationMatrix& c, const Matrix& sample, bool* pairing_ok = nullptr) {
    const auto eig = eig_sym(sample);
    const Eigen::Index p = eig.values.size();
    Vector r(p);
    for (Eigen::Index i = 0; i < p; ++i) r(i) = aligned_residual(c.eigenvectors.col(i), eig.vectors.col(i));
    if (pairing_ok) *pairing_ok = detail::greedy_matching_is_identity((c.eigenvectors.transpose() * eig.vectors).cwiseAbs());
    return r;
}

inline BootstrapResult bootstrap_error(const PopulationMatrix& c, const BootstrapConfig& cfg) {
    require(cfg.replicates >= 1, "bootstrap_error: need R >= 1");
    const auto p = static_cast<Eigen::Index>(c.size());
    require(cfg.n >= static_cast<std::uint64_t>(p), "bootstrap_error: need n >= p");
    const Matrix root = sqrt_psd(c);
    const auto reps = static_cast<Eigen::Index>(cfg.replicates);

    Matrix residuals(reps, p);
    std::vector<char> pairing_ok(cfg.replicates, 1);
    parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
        const auto draw = sample_wishart_scaled(root, cfg.n, child_seed(cfg.seed, {r}));
        bool ok = true;
        residuals.row(static_cast<Eigen::Index>(r)) =
            replicate_residuals(c, draw.matrix, cfg.check_pairing ? &ok : nullptr).transpose();
        pairing_ok[r] = ok;
    });

    // fixed-order reduction over replicates
    BootstrapResult out;
    out.n = cfg.n;
    const double n = static_cast<double>(cfg.n);
    out.mean_n_residual = Vector::Zero(p);
    out.std_n_residual = Vector::Zero(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        double mean = 0.0;
        for (Eigen::Index r = 0; r < reps; ++r) mean += residuals(r, i);
        mean /= static_cast<double>(reps);
        double ss = 0.0;
        for (Eigen::Index r = 0; r < reps; ++r) ss += (residuals(r, i) - mean) * (residuals(r, i) - mean);
        out.mean_n_residual(i) = n * mean;
        out.std_n_residual(i) = reps > 1 ? n * std::sqrt(ss / static_cast<double>(reps - 1)) : 0.0;
    }
    out.residuals = std::move(residuals);
    out.pairing_mismatches = static_cast<std::size_t>(std::count(pairing_ok.begin(), pairing_ok.end(), 0));
    return out;
}

// CSV `index,lambda,h_exact,h_hat,h_hat_uncorrected,n_mean_error,n_std_error,regime_violation`.
// Bootstrap columns are left empty when `boot` is absent; regime_violation
// compares n against h_exact (or h_hat when exact is unavailable).
inline void write_estimator_csv(const std::string& path, std::span<const HValue> values,
                                const BootstrapResult* boot = nullptr) {
    CsvWriter csv(path, {"index", "lambda", "h_exact", "h_hat", "h_hat_uncorrected", "n_mean_error", "n_std_error",
                         "regime_violation"});
    for (const auto& v : values) {
        auto row = csv.row();
        row << v.index << v.lambda << v.h_exact << v.h_hat << v.h_hat_uncorrected;
        if (boot) {
            const auto i = static_cast<Eigen::Index>(v.index);
            const double h = v.h_exact.value_or(v.h_hat.value_or(0.0));
            row << boot->mean_n_residual(i) << boot->std_n_residual(i) << regime_violation(static_cast<double>(boot->n), h);
        } else {
            row << std::string_view{} << std::string_view{} << std::string_view{};
        }
    }
}

}  // namespace eigerr
