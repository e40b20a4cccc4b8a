#pragma once

// Scaled Wishart draws C~ = W(C, n) / n around a PSD (possibly singular)
// population matrix. The Bartlett factor makes the cost independent of n.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "eigerr/error.hpp"
#include "eigerr/graph.hpp"
#include "eigerr/rng.hpp"
#include "eigerr/spectral.hpp"

namespace eigerr {

struct SampleCovariance {
    Matrix matrix;
    std::uint64_t n = 0;
    std::uint64_t parent_seed = 0;
};

// U diag(sqrt(lambda)) U^T. Eigenvalues down to -1e-8 ||C|| are treated as
// rounding noise and clamped to zero.
inline Matrix sqrt_psd(const Vector& eigenvalues, const Matrix& eigenvectors) {
    const double norm = eigenvalues.size() == 0 ? 0.0 : eigenvalues.cwiseAbs().maxCoeff();
    Vector root(eigenvalues.size());
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        const double l = eigenvalues(i);
        if (l < -1e-8 * norm)
            throw config_error("sqrt_psd: matrix is not positive semi-definite (eigenvalue " + std::to_string(l) + ")");
        root(i) = l > 0.0 ? std::sqrt(l) : 0.0;
    }
    return eigenvectors * root.asDiagonal() * eigenvectors.transpose();
}

inline Matrix sqrt_psd(const PopulationMatrix& c) { return sqrt_psd(c.eigenvalues, c.eigenvectors); }

// Lower-triangular Bartlett factor A with A A^T ~ W(I_p, n):
// A_ii = sqrt(chi2_{n-i}) (0-based i), A_ij ~ N(0,1) below the diagonal.
inline Matrix bartlett_factor(Eigen::Index p, std::uint64_t n, Engine& eng) {
    Matrix a = Matrix::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        a(i, i) = std::sqrt(sample_chi_squared(static_cast<double>(n) - static_cast<double>(i), eng));
        for (Eigen::Index j = 0; j < i; ++j) a(i, j) = standard_normal(eng);
    }
    return a;
}

inline SampleCovariance sample_wishart_scaled(const Matrix& c_sqrt, std::uint64_t n, std::uint64_t seed) {
    require(c_sqrt.rows() == c_sqrt.cols(), "sample_wishart_scaled: square root must be square");
    const Eigen::Index p = c_sqrt.rows();
    require(n >= static_cast<std::uint64_t>(p), "sample_wishart_scaled: need n >= p");
    Engine eng = make_engine(seed);
    const Matrix a = bartlett_factor(p, n, eng);
    // (S A)(S A)^T / n, symmetric by construction
    const Matrix b = c_sqrt * a.triangularView<Eigen::Lower>();
    Matrix out = Matrix::Zero(p, p);
    out.selfadjointView<Eigen::Lower>().rankUpdate(b, 1.0 / static_cast<double>(n));
    out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
    return {std::move(out), n, seed};
}

// Debug dump: 16-byte header (magic "WSH1", uint32 p, uint64 n), then p*p
// row-major float64, native byte order.
inline constexpr char kWishartMagic[4] = {'W', 'S', 'H', '1'};

inline void write_sample_binary(const std::string& path, const SampleCovariance& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw numeric_error("cannot open " + path + " for writing");
    const auto p = static_cast<std::uint32_t>(s.matrix.rows());
    out.write(kWishartMagic, 4);
    out.write(reinterpret_cast<const char*>(&p), sizeof p);
    out.write(reinterpret_cast<const char*>(&s.n), sizeof s.n);
    for (std::uint32_t i = 0; i < p; ++i)
        for (std::uint32_t j = 0; j < p; ++j) {
            const double v = s.matrix(i, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
}

inline SampleCovariance read_sample_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open " + path);
    char magic[4];
    std::uint32_t p = 0;
    SampleCovariance s;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&p), sizeof p);
    in.read(reinterpret_cast<char*>(&s.n), sizeof s.n);
    require(in && std::memcmp(magic, kWishartMagic, 4) == 0, "read_sample_binary: bad header");
    s.matrix.resize(p, p);
    for (std::uint32_t i = 0; i < p; ++i)
        for (std::uint32_t j = 0; j < p; ++j) {
            double v;
            in.read(reinterpret_cast<char*>(&v), sizeof v);
            s.matrix(i, j) = v;
        }
    require(static_cast<bool>(in), "read_sample_binary: truncated payload");
    return s;
}

}  // namespace eigerr
