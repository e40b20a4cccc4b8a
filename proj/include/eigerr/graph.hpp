#pragma once

// Random k-regular simple graphs and their combinatorial Laplacians.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "eigerr/error.hpp"
#include "eigerr/rng.hpp"
#include "eigerr/spectral.hpp"

namespace eigerr {

using Edge = std::pair<int, int>;  // u < v

struct RegularGraph {
    int p = 0;
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<Edge> edges;  // sorted, unique
};

// C = D - A with its eigendecomposition (ascending).
struct PopulationMatrix {
    Matrix matrix;
    Vector eigenvalues;
    Matrix eigenvectors;

    std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }

    static PopulationMatrix from_matrix(Matrix m) {
        auto eig = eig_sym(m);
        return {std::move(m), std::move(eig.values), std::move(eig.vectors)};
    }
};

inline constexpr int kMaxGraphRestarts = 1000;

namespace detail {

// One attempt of sequential stub matching: pick two random free stubs, join
// them if they form neither a loop nor a repeated edge. When random draws keep
// failing, enumerate the remaining admissible pairs; if none is left the
// attempt is abandoned.
inline bool try_pair_stubs(int p, int k, Engine& eng, std::vector<Edge>& edges) {
    std::vector<int> stubs;
    stubs.reserve(static_cast<std::size_t>(p) * k);
    for (int v = 0; v < p; ++v)
        for (int j = 0; j < k; ++j) stubs.push_back(v);

    std::vector<std::vector<int>> adj(static_cast<std::size_t>(p));
    auto adjacent = [&](int u, int v) {
        const auto& a = adj[static_cast<std::size_t>(u)];
        return std::find(a.begin(), a.end(), v) != a.end();
    };
    auto ok = [&](int u, int v) { return u != v && !adjacent(u, v); };
    auto join = [&](std::size_t i, std::size_t j) {
        const int u = stubs[i], v = stubs[j];
        adj[static_cast<std::size_t>(u)].push_back(v);
        adj[static_cast<std::size_t>(v)].push_back(u);
        edges.emplace_back(std::min(u, v), std::max(u, v));
        // remove the larger position first so the smaller stays valid
        const auto hi = std::max(i, j), lo = std::min(i, j);
        stubs[hi] = stubs.back();
        stubs.pop_back();
        stubs[lo] = stubs.back();
        stubs.pop_back();
    };

    edges.clear();
    while (!stubs.empty()) {
        const std::size_t m = stubs.size();
        std::uniform_int_distribution<std::size_t> pick(0, m - 1);
        bool joined = false;
        for (int attempt = 0; attempt < 64; ++attempt) {
            const std::size_t i = pick(eng), j = pick(eng);
            if (i != j && ok(stubs[i], stubs[j])) {
                join(i, j);
                joined = true;
                break;
            }
        }
        if (joined) continue;
        std::vector<std::pair<std::size_t, std::size_t>> admissible;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                if (ok(stubs[i], stubs[j])) admissible.emplace_back(i, j);
        if (admissible.empty()) return false;
        std::uniform_int_distribution<std::size_t> choose(0, admissible.size() - 1);
        const auto [i, j] = admissible[choose(eng)];
        join(i, j);
    }
    std::sort(edges.begin(), edges.end());
    return true;
}

}  // namespace detail

inline RegularGraph sample_regular_graph(int p, int k, std::uint64_t seed) {
    require(k >= 1 && p > k, "sample_regular_graph: need p > k >= 1");
    require((static_cast<long long>(p) * k) % 2 == 0, "sample_regular_graph: p*k must be even");
    Engine eng = make_engine(seed);
    RegularGraph g{p, k, seed, {}};
    for (int attempt = 0; attempt < kMaxGraphRestarts; ++attempt)
        if (detail::try_pair_stubs(p, k, eng, g.edges)) return g;
    throw numeric_error("sample_regular_graph: no simple graph after " + std::to_string(kMaxGraphRestarts) +
                        " restarts");
}

inline std::vector<int> degrees(const RegularGraph& g) {
    std::vector<int> deg(static_cast<std::size_t>(g.p), 0);
    for (auto [u, v] : g.edges) {
        ++deg[static_cast<std::size_t>(u)];
        ++deg[static_cast<std::size_t>(v)];
    }
    return deg;
}

inline bool is_simple(const RegularGraph& g) {
    std::set<Edge> seen;
    for (auto [u, v] : g.edges) {
        if (u == v || u < 0 || v >= g.p || u > v) return false;
        if (!seen.insert({u, v}).second) return false;
    }
    return true;
}

inline bool is_connected(const RegularGraph& g) {
    if (g.p == 0) return true;
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.p));
    for (auto [u, v] : g.edges) {
        adj[static_cast<std::size_t>(u)].push_back(v);
        adj[static_cast<std::size_t>(v)].push_back(u);
    }
    std::vector<char> seen(static_cast<std::size_t>(g.p), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v : adj[static_cast<std::size_t>(u)])
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++count;
                stack.push_back(v);
            }
    }
    return count == g.p;
}

inline Matrix laplacian_matrix(const RegularGraph& g) {
    Matrix c = Matrix::Zero(g.p, g.p);
    for (auto [u, v] : g.edges) {
        c(u, v) -= 1.0;
        c(v, u) -= 1.0;
        c(u, u) += 1.0;
        c(v, v) += 1.0;
    }
    return c;
}

inline PopulationMatrix laplacian(const RegularGraph& g) { return PopulationMatrix::from_matrix(laplacian_matrix(g)); }

// Signed p x |E| incidence matrix, edge e = (u,v) oriented u -> v; X * X^T = D - A.
inline Matrix incidence_matrix(const RegularGraph& g) {
    Matrix x = Matrix::Zero(g.p, static_cast<Eigen::Index>(g.edges.size()));
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        x(g.edges[e].first, static_cast<Eigen::Index>(e)) = 1.0;
        x(g.edges[e].second, static_cast<Eigen::Index>(e)) = -1.0;
    }
    return x;
}

// Edge list: header `# p k seed`, then one `u v` pair per line, 0-indexed.
inline void write_edge_list(const std::string& path, const RegularGraph& g) {
    std::ofstream out(path);
    if (!out) throw numeric_error("cannot open " + path + " for writing");
    out << "# " << g.p << ' ' << g.k << ' ' << g.seed << '\n';
    for (auto [u, v] : g.edges) out << u << ' ' << v << '\n';
}

inline RegularGraph read_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open " + path);
    std::string line;
    RegularGraph g;
    require(static_cast<bool>(std::getline(in, line)) && line.rfind("# ", 0) == 0, "edge list: missing '# p k seed' header");
    std::istringstream head(line.substr(2));
    require(static_cast<bool>(head >> g.p >> g.k >> g.seed), "edge list: malformed header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        int u, v;
        require(static_cast<bool>(row >> u >> v), "edge list: malformed line '" + line + "'");
        g.edges.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(g.edges.begin(), g.edges.end());
    return g;
}

}  // namespace eigerr
