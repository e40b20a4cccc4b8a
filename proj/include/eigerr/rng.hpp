#pragma once

// Seeding and the two samplers the Wishart draw needs. Engines are mt19937_64;
// child seeds come from a counter-based splitmix64 hash so that replicate r of
// matrix m is reproducible regardless of scheduling.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace eigerr {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Hash of (master, c0, c1, ...). Distinct counter tuples give unrelated streams.
inline std::uint64_t child_seed(std::uint64_t master, std::initializer_list<std::uint64_t> counters) noexcept {
    std::uint64_t h = splitmix64(master);
    for (auto c : counters) h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
    return h;
}

inline Engine make_engine(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Engine(seq);
}

inline double standard_normal(Engine& eng) {
    return std::normal_distribution<double>{}(eng);
}

inline double uniform01(Engine& eng) {
    // (0,1): log() of the result must be finite
    double u;
    do {
        u = std::uniform_real_distribution<double>{}(eng);
    } while (u <= 0.0);
    return u;
}

// Gamma(shape, 1) via Marsaglia-Tsang squeeze/rejection. Valid for any shape > 0;
// the acceptance test is written with log1p so it stays accurate for shapes
// around 1e10 where v = (1 + c x)^3 is within 1e-5 of one.
inline double sample_gamma(double shape, Engine& eng) {
    if (shape < 1.0) {
        const double g = sample_gamma(shape + 1.0, eng);
        return g * std::pow(uniform01(eng), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double x = standard_normal(eng);
        const double t = c * x;
        if (t <= -1.0) continue;
        const double v = (1.0 + t) * (1.0 + t) * (1.0 + t);
        const double u = uniform01(eng);
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        // d * (1 - v + log v), rearranged to avoid cancellation
        const double log_ratio = d * (3.0 * (std::log1p(t) - t) - 3.0 * t * t - t * t * t);
        if (std::log(u) < 0.5 * x2 + log_ratio) return d * v;
    }
}

inline double sample_chi_squared(double dof, Engine& eng) {
    return 2.0 * sample_gamma(0.5 * dof, eng);
}

}  // namespace eigerr
