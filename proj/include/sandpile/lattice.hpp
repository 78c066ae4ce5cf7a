#pragma once
// Lattice geometry on Z^2: coordinates, rectangles, sink-set descriptions,
// graph distances to the sink set, the 4-neighbour Laplacian and the
// strictly superharmonic bound h used to certify relaxability.

#include "sandpile/bigint.hpp"

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace sandpile {

struct Coord {
    std::int64_t x = 0;
    std::int64_t y = 0;

    friend auto operator<=>(const Coord&, const Coord&) = default;
    friend Coord operator+(Coord a, Coord b) { return {a.x + b.x, a.y + b.y}; }
    friend Coord operator-(Coord a, Coord b) { return {a.x - b.x, a.y - b.y}; }
};

inline constexpr std::array<Coord, 4> kNeighbourOffsets{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

/// Closed rectangle [x0..x1] x [y0..y1]. Empty when x1 < x0 or y1 < y0.
struct Rect {
    std::int64_t x0 = 0, y0 = 0, x1 = -1, y1 = -1;

    friend bool operator==(const Rect&, const Rect&) = default;

    static Rect around(Coord c, std::int64_t r) { return {c.x - r, c.y - r, c.x + r, c.y + r}; }

    [[nodiscard]] bool empty() const { return x1 < x0 || y1 < y0; }
    [[nodiscard]] std::int64_t width() const { return empty() ? 0 : x1 - x0 + 1; }
    [[nodiscard]] std::int64_t height() const { return empty() ? 0 : y1 - y0 + 1; }
    [[nodiscard]] std::int64_t area() const { return width() * height(); }
    [[nodiscard]] bool contains(Coord z) const { return z.x >= x0 && z.x <= x1 && z.y >= y0 && z.y <= y1; }
    [[nodiscard]] bool contains(const Rect& r) const {
        return r.empty() || (r.x0 >= x0 && r.x1 <= x1 && r.y0 >= y0 && r.y1 <= y1);
    }
    [[nodiscard]] Rect expanded(std::int64_t by) const { return {x0 - by, y0 - by, x1 + by, y1 + by}; }
    [[nodiscard]] Rect shrunk(std::int64_t by) const { return expanded(-by); }
    [[nodiscard]] Rect united(const Rect& o) const {
        if (empty()) return o;
        if (o.empty()) return *this;
        return {std::min(x0, o.x0), std::min(y0, o.y0), std::max(x1, o.x1), std::max(y1, o.y1)};
    }
    [[nodiscard]] Rect intersected(const Rect& o) const {
        return {std::max(x0, o.x0), std::max(y0, o.y0), std::min(x1, o.x1), std::min(y1, o.y1)};
    }
};

inline std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
    const std::int64_t r = a % m;
    return r < 0 ? r + m : r;
}

namespace sinks {

/// S = {(m i, n j)}.
struct PeriodicLattice {
    std::int64_t m = 2, n = 2;
    friend bool operator==(const PeriodicLattice&, const PeriodicLattice&) = default;
};

/// Gamma = {(i, 0) : i >= 1}; everything else is a sink.
struct RayComplement {
    friend bool operator==(const RayComplement&, const RayComplement&) = default;
};

/// Gamma = {(i, 0) : 1 <= i <= length}.
struct TruncatedRay {
    std::int64_t length = 1;
    friend bool operator==(const TruncatedRay&, const TruncatedRay&) = default;
};

/// Gamma = {(i, 0) : i in Z}.
struct FullLineComplement {
    friend bool operator==(const FullLineComplement&, const FullLineComplement&) = default;
};

/// Vertical path attached to the ray at (column, 0). Its cells are
/// (column, y) for 0 <= y < height; the sink closing the path sits at
/// (column, height).
struct Interval {
    std::int64_t column = 1;
    std::int64_t height = 1;
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Gamma = ray union the attached intervals. With x_limit set, every cell
/// with x > x_limit is a sink (finite prefix of the construction).
struct LineWithIntervals {
    std::vector<Interval> intervals;
    std::optional<std::int64_t> x_limit;
    friend bool operator==(const LineWithIntervals&, const LineWithIntervals&) = default;
};

/// Periodic sink pattern: z is a sink iff (z.x mod m, z.y mod n) is listed.
/// The same data describes the finite torus quotient Z_m x Z_n.
struct TorusQuotient {
    std::int64_t m = 2, n = 2;
    std::vector<Coord> sinks;  // sorted, unique, reduced into [0,m) x [0,n)
    friend bool operator==(const TorusQuotient&, const TorusQuotient&) = default;
};

/// Listed cells inside `window` are sinks; every cell outside is a sink.
struct Explicit {
    Rect window;
    std::vector<Coord> cells;  // sorted, unique
    friend bool operator==(const Explicit&, const Explicit&) = default;
};

}  // namespace sinks

using SinkSpec = std::variant<sinks::PeriodicLattice, sinks::RayComplement, sinks::TruncatedRay,
                              sinks::FullLineComplement, sinks::LineWithIntervals, sinks::TorusQuotient,
                              sinks::Explicit>;

inline sinks::TorusQuotient make_torus_quotient(std::int64_t m, std::int64_t n, std::vector<Coord> cells) {
    for (auto& c : cells) c = {floor_mod(c.x, m), floor_mod(c.y, n)};
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    return {m, n, std::move(cells)};
}

inline sinks::Explicit make_explicit(Rect window, std::vector<Coord> cells) {
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    return {window, std::move(cells)};
}

/// Throws std::invalid_argument when a spec violates its parameter ranges.
inline void validate(const SinkSpec& spec) {
    auto fail = [](const std::string& what) { throw std::invalid_argument("invalid sink spec: " + what); };
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, sinks::PeriodicLattice>) {
                if (s.m < 2 || s.n < 2) fail("periodic lattice needs m, n >= 2");
            } else if constexpr (std::is_same_v<S, sinks::TruncatedRay>) {
                if (s.length < 1) fail("truncated ray needs length >= 1");
            } else if constexpr (std::is_same_v<S, sinks::LineWithIntervals>) {
                for (const auto& iv : s.intervals) {
                    if (iv.column < 1) fail("interval column must be >= 1");
                    if (iv.height < 1) fail("interval height must be >= 1");
                }
                if (s.x_limit && *s.x_limit < 1) fail("x_limit must be >= 1");
            } else if constexpr (std::is_same_v<S, sinks::TorusQuotient>) {
                if (s.m < 2 || s.n < 2) fail("torus needs m, n >= 2");
                if (s.sinks.empty()) fail("torus needs at least one sink");
                for (const auto& c : s.sinks)
                    if (c.x < 0 || c.x >= s.m || c.y < 0 || c.y >= s.n) fail("torus sink outside Z_m x Z_n");
            } else if constexpr (std::is_same_v<S, sinks::Explicit>) {
                if (s.window.empty()) fail("explicit window is empty");
            }
        },
        spec);
}

inline bool is_sink(const SinkSpec& spec, Coord z) {
    return std::visit(
        [&](const auto& s) -> bool {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, sinks::PeriodicLattice>) {
                return floor_mod(z.x, s.m) == 0 && floor_mod(z.y, s.n) == 0;
            } else if constexpr (std::is_same_v<S, sinks::RayComplement>) {
                return !(z.y == 0 && z.x >= 1);
            } else if constexpr (std::is_same_v<S, sinks::TruncatedRay>) {
                return !(z.y == 0 && z.x >= 1 && z.x <= s.length);
            } else if constexpr (std::is_same_v<S, sinks::FullLineComplement>) {
                return z.y != 0;
            } else if constexpr (std::is_same_v<S, sinks::LineWithIntervals>) {
                if (s.x_limit && z.x > *s.x_limit) return true;
                if (z.y == 0 && z.x >= 1) return false;
                for (const auto& iv : s.intervals)
                    if (z.x == iv.column && z.y >= 0 && z.y < iv.height) return false;
                return true;
            } else if constexpr (std::is_same_v<S, sinks::TorusQuotient>) {
                const Coord r{floor_mod(z.x, s.m), floor_mod(z.y, s.n)};
                return std::binary_search(s.sinks.begin(), s.sinks.end(), r);
            } else {
                if (!s.window.contains(z)) return true;
                return std::binary_search(s.cells.begin(), s.cells.end(), z);
            }
        },
        spec);
}

/// Bounding box of the non-sink set when it is finite, nullopt otherwise.
inline std::optional<Rect> nonsink_bounds(const SinkSpec& spec) {
    return std::visit(
        [](const auto& s) -> std::optional<Rect> {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, sinks::TruncatedRay>) {
                return Rect{1, 0, s.length, 0};
            } else if constexpr (std::is_same_v<S, sinks::LineWithIntervals>) {
                if (!s.x_limit) return std::nullopt;
                Rect r{1, 0, *s.x_limit, 0};
                for (const auto& iv : s.intervals)
                    if (iv.column <= *s.x_limit) r = r.united({iv.column, 0, iv.column, iv.height - 1});
                return r;
            } else if constexpr (std::is_same_v<S, sinks::Explicit>) {
                return s.window;
            } else {
                return std::nullopt;
            }
        },
        spec);
}

/// Smallest window holding one full period (periodic variants) or a
/// representative stretch of the non-sink set.
inline Rect default_probe_window(const SinkSpec& spec) {
    return std::visit(
        [&](const auto& s) -> Rect {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, sinks::PeriodicLattice> || std::is_same_v<S, sinks::TorusQuotient>) {
                return {0, 0, s.m - 1, s.n - 1};
            } else if constexpr (std::is_same_v<S, sinks::RayComplement>) {
                return {1, -1, 64, 1};
            } else if constexpr (std::is_same_v<S, sinks::FullLineComplement>) {
                return {-32, -1, 32, 1};
            } else if constexpr (std::is_same_v<S, sinks::LineWithIntervals>) {
                if (auto b = nonsink_bounds(spec)) return *b;
                Rect r{1, 0, 64, 0};
                for (const auto& iv : s.intervals) r = r.united({iv.column, 0, iv.column, iv.height - 1});
                return r;
            } else {
                return *nonsink_bounds(spec);
            }
        },
        spec);
}

/// Graph (L1 path) distance from z to the nearest sink, or nullopt when it
/// exceeds `cap`.
inline std::optional<std::int64_t> distance_to_sink(const SinkSpec& spec, Coord z, std::int64_t cap = 64) {
    if (is_sink(spec, z)) return 0;
    // BFS over the diamond of radius cap; cells are keyed by offset.
    const std::int64_t side = 2 * cap + 1;
    std::vector<std::int64_t> dist(static_cast<std::size_t>(side * side), -1);
    auto key = [&](Coord d) { return static_cast<std::size_t>((d.y + cap) * side + (d.x + cap)); };
    std::deque<Coord> queue{{0, 0}};
    dist[key({0, 0})] = 0;
    while (!queue.empty()) {
        const Coord d = queue.front();
        queue.pop_front();
        const std::int64_t dd = dist[key(d)];
        if (dd == cap) continue;
        for (const Coord off : kNeighbourOffsets) {
            const Coord nd = d + off;
            if (std::abs(nd.x) > cap || std::abs(nd.y) > cap || dist[key(nd)] >= 0) continue;
            if (is_sink(spec, z + nd)) return dd + 1;
            dist[key(nd)] = dd + 1;
            queue.push_back(nd);
        }
    }
    return std::nullopt;
}

/// Distance field to the sink set over `window`, computed by a multi-source
/// BFS over window expanded by `cap`. Entries are -1 where the distance
/// exceeds `cap`.
inline std::vector<std::int64_t> distance_field(const SinkSpec& spec, const Rect& window, std::int64_t cap) {
    const Rect region = window.expanded(cap);
    const std::int64_t w = region.width(), h = region.height();
    std::vector<std::int64_t> dist(static_cast<std::size_t>(w * h), -1);
    std::deque<std::int64_t> queue;
    for (std::int64_t y = region.y0; y <= region.y1; ++y)
        for (std::int64_t x = region.x0; x <= region.x1; ++x)
            if (is_sink(spec, {x, y})) {
                const auto i = (y - region.y0) * w + (x - region.x0);
                dist[static_cast<std::size_t>(i)] = 0;
                queue.push_back(i);
            }
    while (!queue.empty()) {
        const std::int64_t i = queue.front();
        queue.pop_front();
        const std::int64_t d = dist[static_cast<std::size_t>(i)];
        if (d == cap) continue;
        const std::int64_t x = i % w, y = i / w;
        for (const Coord off : kNeighbourOffsets) {
            const std::int64_t nx = x + off.x, ny = y + off.y;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const auto j = static_cast<std::size_t>(ny * w + nx);
            if (dist[j] >= 0) continue;
            dist[j] = d + 1;
            queue.push_back(static_cast<std::int64_t>(j));
        }
    }
    std::vector<std::int64_t> out(static_cast<std::size_t>(window.area()), -1);
    for (std::int64_t y = window.y0; y <= window.y1; ++y)
        for (std::int64_t x = window.x0; x <= window.x1; ++x)
            out[static_cast<std::size_t>((y - window.y0) * window.width() + (x - window.x0))] =
                dist[static_cast<std::size_t>((y - region.y0) * w + (x - region.x0))];
    return out;
}

/// Largest distance to S over the non-sink cells of `probe`; nullopt
/// (infinite) when some probed cell is farther than `cap` from every sink.
/// For periodic variants a probe covering one period yields the true C.
inline std::optional<std::int64_t> cnet_radius(const SinkSpec& spec, const Rect& probe, std::int64_t cap = 64) {
    const auto dist = distance_field(spec, probe, cap);
    std::int64_t best = 0;
    for (const auto d : dist) {
        if (d < 0) return std::nullopt;
        best = std::max(best, d);
    }
    return best;
}

inline std::optional<std::int64_t> cnet_radius(const SinkSpec& spec) {
    return cnet_radius(spec, default_probe_window(spec));
}

/// Delta f(z) = sum over neighbours of f - 4 f(z), with sink neighbours
/// contributing 0 and the value at a sink defined as 0.
template <class F>
auto laplacian_at(const SinkSpec& spec, F&& f, Coord z) -> std::decay_t<decltype(f(z))> {
    using T = std::decay_t<decltype(f(z))>;
    if (is_sink(spec, z)) return T(0);
    T acc = T(0);
    for (const Coord off : kNeighbourOffsets) {
        const Coord w = z + off;
        if (!is_sink(spec, w)) acc += f(w);
    }
    acc -= T(4) * f(z);
    return acc;
}

/// h for a cell at graph distance `dist` from S: sum_{k=1}^{dist} 4^{C-k}.
inline BigInt superharmonic_h_at_distance(std::int64_t dist, std::int64_t C) {
    if (dist < 0 || dist > C) throw std::invalid_argument("distance outside [0, C]");
    BigInt acc = 0;
    for (std::int64_t k = 1; k <= dist; ++k) acc += BigInt(1) << static_cast<unsigned>(2 * (C - k));
    return acc;
}

/// h(z) = sum_{k=1}^{dist(z,S)} 4^{C-k}. Rejects C smaller than dist(z,S).
inline BigInt superharmonic_h(const SinkSpec& spec, Coord z, std::int64_t C) {
    const auto d = distance_to_sink(spec, z, std::max<std::int64_t>(C, 0));
    if (!d) throw std::invalid_argument("C is smaller than the distance from z to the sink set");
    return superharmonic_h_at_distance(*d, C);
}

}  // namespace sandpile
