#pragma once
// Toppling kernels over an explicit neighbour table. Templated on the cell
// integer type; fixed-width types throw OverflowError instead of wrapping so
// the caller can retry with a wider type and obtain bit-identical results.

#include "sandpile/bigint.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <random>
#include <vector>

namespace sandpile::detail {

using Neighbours = std::array<std::int32_t, 4>;

enum CellFlag : std::uint8_t {
    kSink = 1,    // never topples, always 0
    kFrozen = 2,  // may not topple yet (window edge with live cells outside)
    kBand = 4,    // toppling here means the window must grow
};

/// Neighbour slot -1 means the grain leaves the system (sink or outside).
/// Repeated indices encode multi-edges.
struct Topology {
    std::vector<Neighbours> nbr;
    std::vector<std::uint8_t> flags;

    [[nodiscard]] std::size_t size() const { return nbr.size(); }
    [[nodiscard]] bool can_topple(std::size_t i) const { return (flags[i] & (kSink | kFrozen)) == 0; }
};

enum class ToppleOrder { Fifo, Random };

struct SweepOutcome {
    bool toppled = false;
    bool band = false;
};

/// One in-place row-major pass. Each cell with v >= floor + 4 topples
/// q = (v - floor) / 4 times at once. floor = 0 is ordinary relaxation;
/// a positive floor gives the partial relaxation that keeps cells >= floor.
template <class T>
SweepOutcome bulk_sweep(const Topology& topo, std::vector<T>& val, std::vector<T>& odo, const T& floor = T(0)) {
    SweepOutcome out;
    const std::size_t n = topo.size();
    const T four = T(4);
    const T threshold = floor + four;
    for (std::size_t i = 0; i < n; ++i) {
        if (!topo.can_topple(i)) continue;
        T& v = val[i];
        if (v < threshold) continue;
        const T q = T(v - floor) >> 2;
        v -= q * four;
        checked_add(odo[i], q);
        for (const std::int32_t j : topo.nbr[i])
            if (j >= 0) checked_add(val[static_cast<std::size_t>(j)], q);
        out.toppled = true;
        if (topo.flags[i] & kBand) out.band = true;
    }
    return out;
}

struct NaiveOutcome {
    std::uint64_t events = 0;
    bool band = false;
    bool budget_exceeded = false;
    bool stable = false;
};

/// Single topplings until stable, until a band cell topples (window must
/// grow) or until `budget` events. Fifo seeds the queue in index order.
template <class T>
NaiveOutcome naive_pass(const Topology& topo, std::vector<T>& val, std::vector<T>& odo, ToppleOrder order,
                        std::mt19937_64& rng, std::uint64_t budget) {
    NaiveOutcome out;
    const std::size_t n = topo.size();
    const T four = T(4);
    const T one = T(1);
    auto unstable = [&](std::size_t i) { return topo.can_topple(i) && val[i] >= four; };

    auto topple_once = [&](std::size_t i) {
        val[i] -= four;
        checked_add(odo[i], one);
        for (const std::int32_t j : topo.nbr[i])
            if (j >= 0) checked_add(val[static_cast<std::size_t>(j)], one);
        ++out.events;
    };

    if (order == ToppleOrder::Fifo) {
        std::vector<std::uint8_t> queued(n, 0);
        std::deque<std::size_t> queue;
        for (std::size_t i = 0; i < n; ++i)
            if (unstable(i)) {
                queue.push_back(i);
                queued[i] = 1;
            }
        while (!queue.empty()) {
            if (out.events >= budget) {
                out.budget_exceeded = true;
                return out;
            }
            const std::size_t i = queue.front();
            queue.pop_front();
            queued[i] = 0;
            if (!unstable(i)) continue;
            topple_once(i);
            for (const std::int32_t j : topo.nbr[i]) {
                if (j < 0) continue;
                const auto u = static_cast<std::size_t>(j);
                if (!queued[u] && unstable(u)) {
                    queue.push_back(u);
                    queued[u] = 1;
                }
            }
            if (unstable(i)) {
                queue.push_back(i);
                queued[i] = 1;
            }
            if (topo.flags[i] & kBand) {
                out.band = true;
                return out;
            }
        }
    } else {
        // Uniformly random choice among the currently unstable cells.
        std::vector<std::size_t> pool;
        std::vector<std::int64_t> pos(n, -1);
        auto insert = [&](std::size_t i) {
            if (pos[i] < 0 && unstable(i)) {
                pos[i] = static_cast<std::int64_t>(pool.size());
                pool.push_back(i);
            }
        };
        auto erase = [&](std::size_t i) {
            const auto p = static_cast<std::size_t>(pos[i]);
            pos[pool.back()] = static_cast<std::int64_t>(p);
            pool[p] = pool.back();
            pool.pop_back();
            pos[i] = -1;
        };
        for (std::size_t i = 0; i < n; ++i) insert(i);
        while (!pool.empty()) {
            if (out.events >= budget) {
                out.budget_exceeded = true;
                return out;
            }
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            const std::size_t i = pool[pick(rng)];
            topple_once(i);
            if (!unstable(i)) erase(i);
            for (const std::int32_t j : topo.nbr[i])
                if (j >= 0) insert(static_cast<std::size_t>(j));
            if (topo.flags[i] & kBand) {
                out.band = true;
                return out;
            }
        }
    }
    out.stable = true;
    return out;
}

/// Runs f.template operator()<T>() with T = int64, then Int128, then BigInt,
/// moving to the next type whenever the previous one overflows.
template <class F>
auto with_promotion(F&& f) {
    try {
        return f.template operator()<std::int64_t>();
    } catch (const OverflowError&) {
    }
    try {
        return f.template operator()<Int128>();
    } catch (const OverflowError&) {
    }
    return f.template operator()<BigInt>();
}

}  // namespace sandpile::detail
