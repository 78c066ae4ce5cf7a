#pragma once
// The sandpile group of a finite carrier, realised on recurrent states:
// Creutz identity, recurrence, neutral element, addition, inversion,
// scalar multiples, element orders, the burning test and the tree count.

#include "sandpile/bigint.hpp"
#include "sandpile/carrier.hpp"
#include "sandpile/grid.hpp"
#include "sandpile/linalg.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sandpile {

class GroupError : public Error {
public:
    using Error::Error;
};

class SandpileGroup {
public:
    explicit SandpileGroup(FiniteSandpile carrier) : g_(std::move(carrier)) {
        if (g_.size() == 0) throw std::invalid_argument("carrier has no vertices");
    }

    [[nodiscard]] const FiniteSandpile& carrier() const { return g_; }
    [[nodiscard]] const Config& beta() const { return g_.beta(); }

    [[nodiscard]] Config relax(const Config& x) const { return g_.stabilize(x); }

    /// Definition: (x + beta)° == x.
    [[nodiscard]] bool is_recurrent(const Config& x) const {
        g_.check_size(x.size());
        for (const auto v : x)
            if (v < 0 || v > 3) return false;
        return relax(plus(x, beta())) == x;
    }

    /// Fire spreads from the sinks; a vertex burns once its grains reach
    /// the number of edges leading to still unburnt vertices.
    [[nodiscard]] bool burning_test(const Config& x) const {
        g_.check_size(x.size());
        const auto& topo = g_.topology();
        const std::size_t n = g_.size();
        std::vector<std::int64_t> unburnt_edges(n, 0);
        for (std::size_t i = 0; i < n; ++i)
            for (const auto j : topo.nbr[i])
                if (j >= 0) ++unburnt_edges[i];
        std::vector<char> burnt(n, 0);
        std::vector<std::size_t> stack;
        for (std::size_t i = 0; i < n; ++i)
            if (x[i] >= unburnt_edges[i]) {
                burnt[i] = 1;
                stack.push_back(i);
            }
        std::size_t count = stack.size();
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            for (const auto j : topo.nbr[i]) {
                if (j < 0) continue;
                const auto u = static_cast<std::size_t>(j);
                if (burnt[u]) continue;
                if (x[u] >= --unburnt_edges[u]) {
                    burnt[u] = 1;
                    stack.push_back(u);
                    ++count;
                }
            }
        }
        return count == n;
    }

    /// Recurrent representative of the class of a stable state: relax
    /// x + k beta for k = 1, 2, 4, ... until the result is recurrent.
    [[nodiscard]] Config drive(Config x) const {
        if (is_recurrent(x)) return x;
        for (std::int64_t k = 1; k <= kDriveCap; k *= 2) {
            Config y = relax(plus(x, scaled(beta(), k)));
            if (is_recurrent(y)) return y;
        }
        throw GroupError("could not reach a recurrent state within the retry cap");
    }

    /// Recurrent representative of the class of any integer vector.
    [[nodiscard]] Config to_recurrent(const std::vector<BigInt>& x) const {
        g_.check_size(x.size());
        BigInt lowest = 0;
        for (const auto& v : x) lowest = std::min(lowest, v);
        std::vector<BigInt> y = x;
        if (lowest < 0) {
            const BigInt floor = -lowest;
            const auto filler = filled_multiple_of_beta(floor);
            for (std::size_t i = 0; i < y.size(); ++i) y[i] += filler[i];
        }
        return drive(g_.relax(y).stable);
    }

    [[nodiscard]] Config to_recurrent(const Config& x) const {
        return to_recurrent(std::vector<BigInt>(x.begin(), x.end()));
    }

    /// The recurrent state equivalent to 0.
    [[nodiscard]] const Config& neutral() const {
        if (!neutral_) neutral_ = drive(Config(g_.size(), 0));
        return *neutral_;
    }

    [[nodiscard]] Config add(const Config& a, const Config& b) const { return drive(relax(plus(a, b))); }

    /// (partial(n beta) - a)° for doubling n until every vertex of the
    /// partially relaxed n beta holds at least max(a).
    [[nodiscard]] Config inverse(const Config& a) const {
        g_.check_size(a.size());
        std::int64_t top = 0;
        for (const auto v : a) top = std::max(top, v);
        const auto filler = filled_multiple_of_beta(top);
        std::vector<BigInt> y(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) y[i] = filler[i] - a[i];
        return drive(g_.relax(y).stable);
    }

    [[nodiscard]] Config multiply(const Config& a, BigInt k) const {
        if (k < 0) return multiply(inverse(a), -k);
        Config acc = neutral(), base = a;
        while (k > 0) {
            if ((k & 1) != 0) acc = add(acc, base);
            k >>= 1;
            if (k > 0) base = add(base, base);
        }
        return acc;
    }

    /// Smallest k <= k_max with k a = e.
    [[nodiscard]] std::optional<std::int64_t> order(const Config& a, std::int64_t k_max) const {
        const Config& e = neutral();
        Config x = a;
        for (std::int64_t k = 1; k <= k_max; ++k) {
            if (x == e) return k;
            x = add(x, a);
        }
        return std::nullopt;
    }

    /// Exact order of a, given a multiple N of it (for instance the group
    /// order): strip prime factors of N while the multiple still kills a.
    [[nodiscard]] BigInt order_dividing(const Config& a, const BigInt& N) const {
        const Config& e = neutral();
        if (multiply(a, N) != e) throw GroupError("N is not a multiple of the element order");
        BigInt ord = N;
        for (const auto& [p, exp] : factorize(N))
            for (int i = 0; i < exp; ++i) {
                if (multiply(a, ord / p) != e) break;
                ord /= p;
            }
        return ord;
    }

    /// Matrix-Tree count: det of the reduced Laplacian 4I - A.
    [[nodiscard]] BigInt spanning_tree_count() const {
        if (!tree_count_) {
            tree_count_ = bareiss_determinant(reduced_laplacian());
            if (*tree_count_ == 0) throw GroupError("reduced Laplacian is singular: graph is disconnected from S");
        }
        return *tree_count_;
    }

    /// 4 on the diagonal, minus the number of edges between distinct vertices.
    [[nodiscard]] Matrix<BigInt> reduced_laplacian() const {
        const std::size_t n = g_.size();
        Matrix<BigInt> L(n, std::vector<BigInt>(n, 0));
        for (std::size_t i = 0; i < n; ++i) {
            L[i][i] += 4;
            for (const auto j : g_.topology().nbr[i])
                if (j >= 0) L[i][static_cast<std::size_t>(j)] -= 1;
        }
        return L;
    }

    static constexpr std::int64_t kDriveCap = std::int64_t(1) << 40;

private:
    static Config plus(const Config& a, const Config& b) {
        Config out(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            out[i] = a[i];
            detail::checked_add(out[i], b[i]);
        }
        return out;
    }
    static Config scaled(const Config& a, std::int64_t k) {
        Config out(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = detail::checked_mul(a[i], k);
        return out;
    }

    // Partially relaxed n beta, every vertex >= floor, for the least power
    // of two n that achieves it. Equivalent to 0 in the group.
    [[nodiscard]] std::vector<BigInt> filled_multiple_of_beta(const BigInt& floor) const {
        for (BigInt n = 1; n <= kDriveCap; n *= 2) {
            std::vector<BigInt> nb(g_.size());
            for (std::size_t i = 0; i < nb.size(); ++i) nb[i] = n * beta()[i];
            auto part = g_.partial_relax(nb, floor);
            if (std::all_of(part.begin(), part.end(), [&](const BigInt& v) { return v >= floor; })) return part;
        }
        throw GroupError("no multiple of beta fills every vertex within the cap");
    }

    FiniteSandpile g_;
    mutable std::optional<Config> neutral_;
    mutable std::optional<BigInt> tree_count_;
};

/// beta(z) = number of sink neighbours of z, 0 on sinks.
inline SandState creutz_beta(const SinkSpec& spec, const Rect& window) {
    SandState st(spec, window, 0);
    for (std::int64_t y = window.y0; y <= window.y1; ++y)
        for (std::int64_t x = window.x0; x <= window.x1; ++x) {
            const Coord z{x, y};
            if (is_sink(spec, z)) continue;
            int b = 0;
            for (const Coord off : kNeighbourOffsets) b += is_sink(spec, z + off) ? 1 : 0;
            st.set(z, b);
        }
    return st;
}

struct RecurrenceVerdict {
    bool recurrent = false;
    bool exact = false;   // false: certified on the window minus margin only
    std::int64_t margin = 0;
    Rect certified;       // cells whose values were compared
};

/// Recurrence of a stable state. Exact on torus quotients and finite
/// non-sink sets; otherwise (x + beta)° is computed on the state window with
/// everything outside treated as sink and compared on the window shrunk by
/// `margin`.
inline RecurrenceVerdict is_recurrent(const SandState& g, std::int64_t margin = 20) {
    if (!g.is_stable()) return {};
    const auto carrier = FiniteSandpile::for_spec(g.sinks(), g.window());
    const SandpileGroup G(carrier);
    const Config x = carrier.read_config(g);
    RecurrenceVerdict v;
    v.exact = carrier.exact();
    if (v.exact) {
        v.certified = carrier.rect();
        v.recurrent = G.is_recurrent(x);
        return v;
    }
    Config y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += G.beta()[i];
    const Config r = G.relax(y);
    v.margin = margin;
    v.certified = g.window().shrunk(margin);
    v.recurrent = true;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (v.certified.contains(carrier.cells()[i]) && r[i] != x[i]) v.recurrent = false;
    return v;
}

inline Config neutral_element(const FiniteSandpile& t) { return SandpileGroup(t).neutral(); }

inline Config group_add(const FiniteSandpile& t, const Config& a, const Config& b) {
    return SandpileGroup(t).add(a, b);
}

inline Config group_inverse(const FiniteSandpile& t, const Config& a) { return SandpileGroup(t).inverse(a); }

inline std::optional<std::int64_t> element_order(const FiniteSandpile& t, const Config& a, std::int64_t k_max) {
    return SandpileGroup(t).order(a, k_max);
}

inline bool burning_test(const FiniteSandpile& t, const Config& g) { return SandpileGroup(t).burning_test(g); }

inline BigInt spanning_tree_count(const FiniteSandpile& t) { return SandpileGroup(t).spanning_tree_count(); }

}  // namespace sandpile
