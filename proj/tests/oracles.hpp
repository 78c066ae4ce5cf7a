#pragma once
// Small independent reference implementations used by the test suites.
// Everything here works on explicit adjacency lists with plain int64 and
// deliberately avoids the library's kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

using Vec = std::vector<std::int64_t>;
using Adj = std::vector<std::vector<int>>;  // -1 entries are sinks

struct Graph {
    Adj adj;
    int size() const { return static_cast<int>(adj.size()); }
};

/// Grid rows x cols; cells whose predicate says sink are dropped; edges to
/// dropped or outside cells point to -1. wrap_x / wrap_y give torus edges.
inline Graph grid_graph(int cols, int rows, const std::function<bool(int, int)>& sink, bool wrap = false,
                        std::vector<std::pair<int, int>>* coords = nullptr) {
    std::map<std::pair<int, int>, int> id;
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x)
            if (!sink(x, y)) {
                const int k = static_cast<int>(id.size());
                id[{x, y}] = k;
                if (coords) coords->push_back({x, y});
            }
    Graph g;
    g.adj.resize(id.size());
    for (auto [c, k] : id) {
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
            int x = c.first + dx[d], y = c.second + dy[d];
            if (wrap) {
                x = (x % cols + cols) % cols;
                y = (y % rows + rows) % rows;
            }
            auto it = id.find({x, y});
            g.adj[k].push_back(it == id.end() ? -1 : it->second);
        }
    }
    return g;
}

inline Vec beta(const Graph& g) {
    Vec b(g.adj.size(), 0);
    for (int i = 0; i < g.size(); ++i)
        for (int j : g.adj[i])
            if (j < 0) ++b[i];
    return b;
}

/// Topple one grain at a time, always the lowest-index unstable vertex.
inline std::pair<Vec, Vec> relax(const Graph& g, Vec v) {
    Vec f(v.size(), 0);
    for (bool again = true; again;) {
        again = false;
        for (int i = 0; i < g.size(); ++i)
            if (v[i] >= 4) {
                v[i] -= 4;
                ++f[i];
                for (int j : g.adj[i])
                    if (j >= 0) ++v[j];
                again = true;
                break;
            }
    }
    return {v, f};
}

/// psi + Delta F, the state produced by toppling vector F.
inline Vec apply(const Graph& g, const Vec& psi, const Vec& F) {
    Vec out = psi;
    for (int i = 0; i < g.size(); ++i) {
        out[i] -= 4 * F[i];
        for (int j : g.adj[i])
            if (j >= 0) out[j] += F[i];
    }
    return out;
}

inline bool feasible(const Graph& g, const Vec& psi, const Vec& F) {
    const Vec s = apply(g, psi, F);
    return std::all_of(s.begin(), s.end(), [](auto x) { return x <= 3; });
}

/// Least F >= 0 with psi + Delta F <= 3, as the least fixed point of the
/// monotone map F(i) <- max(0, ceil((psi(i) + sum_nbr F - 3) / 4)).
inline Vec least_feasible(const Graph& g, const Vec& psi) {
    Vec F(psi.size(), 0);
    for (bool changed = true; changed;) {
        changed = false;
        for (int i = 0; i < g.size(); ++i) {
            std::int64_t in = psi[i];
            for (int j : g.adj[i])
                if (j >= 0) in += F[j];
            const std::int64_t need = in - 3 > 0 ? (in - 3 + 3) / 4 : 0;
            if (need > F[i]) {
                F[i] = need;
                changed = true;
            }
        }
    }
    return F;
}

/// Every feasible F' with 0 <= F'(i) <= bound; calls visit on each.
inline void for_each_feasible(const Graph& g, const Vec& psi, std::int64_t bound,
                              const std::function<void(const Vec&)>& visit) {
    Vec F(psi.size(), 0);
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == F.size()) {
            if (feasible(g, psi, F)) visit(F);
            return;
        }
        for (std::int64_t v = 0; v <= bound; ++v) {
            F[i] = v;
            rec(i + 1);
        }
        F[i] = 0;
    };
    rec(0);
}

/// Recurrence by definition, (x + beta)° == x, with the reference relaxation.
inline bool recurrent(const Graph& g, const Vec& x) {
    Vec y = x;
    const Vec b = beta(g);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i];
    return relax(g, y).first == x;
}

/// Determinant by cofactor expansion, for matrices up to about 9x9.
inline std::int64_t det(const std::vector<Vec>& a) {
    const std::size_t n = a.size();
    if (n == 0) return 1;
    if (n == 1) return a[0][0];
    std::int64_t acc = 0;
    for (std::size_t c = 0; c < n; ++c) {
        if (a[0][c] == 0) continue;
        std::vector<Vec> minor;
        for (std::size_t r = 1; r < n; ++r) {
            Vec row;
            for (std::size_t k = 0; k < n; ++k)
                if (k != c) row.push_back(a[r][k]);
            minor.push_back(row);
        }
        acc += (c % 2 ? -1 : 1) * a[0][c] * det(minor);
    }
    return acc;
}

/// Reduced Laplacian (positive definite form 4I - A).
inline std::vector<Vec> reduced_laplacian(const Graph& g) {
    std::vector<Vec> L(g.adj.size(), Vec(g.adj.size(), 0));
    for (int i = 0; i < g.size(); ++i) {
        L[i][i] = 4;
        for (int j : g.adj[i])
            if (j >= 0) L[i][j] -= 1;
    }
    return L;
}

}  // namespace oracle

namespace oracle {

/// Rank over Z_p by plain Gaussian elimination.
inline std::size_t rank_mod(std::vector<Vec> a, std::int64_t p) {
    auto md = [p](std::int64_t v) { return ((v % p) + p) % p; };
    auto inv = [&](std::int64_t v) {
        std::int64_t r = 1, b = md(v), e = p - 2;
        while (e) {
            if (e & 1) r = r * b % p;
            b = b * b % p;
            e >>= 1;
        }
        return r;
    };
    std::size_t rank = 0;
    const std::size_t cols = a.empty() ? 0 : a[0].size();
    for (std::size_t c = 0; c < cols && rank < a.size(); ++c) {
        std::size_t s = rank;
        while (s < a.size() && md(a[s][c]) == 0) ++s;
        if (s == a.size()) continue;
        std::swap(a[s], a[rank]);
        const std::int64_t iv = inv(a[rank][c]);
        for (auto& v : a[rank]) v = md(v) * iv % p;
        for (std::size_t r = 0; r < a.size(); ++r)
            if (r != rank && md(a[r][c]) != 0) {
                const std::int64_t f = md(a[r][c]);
                for (std::size_t k = 0; k < cols; ++k) a[r][k] = md(a[r][k] - f * a[rank][k]);
            }
        ++rank;
    }
    return rank;
}

/// Dense double-precision solve with partial pivoting.
inline std::vector<double> solve_double(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = a.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

}  // namespace oracle
