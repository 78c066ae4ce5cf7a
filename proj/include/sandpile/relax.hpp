#pragma once
// Relaxation of plane states: single-toppling (naive) and multi-toppling
// sweep (bulk) strategies, both returning the stable state and odometer.
// The window grows whenever topplings come within the guard band of an edge
// beyond which non-sink cells exist.

#include "sandpile/bigint.hpp"
#include "sandpile/detail/kernel.hpp"
#include "sandpile/grid.hpp"
#include "sandpile/lattice.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace sandpile {

using detail::ToppleOrder;

class RelaxBudgetExceeded : public Error {
public:
    using Error::Error;
};

struct RelaxOptions {
    ToppleOrder order = ToppleOrder::Fifo;  // naive strategy only
    std::uint64_t seed = 0;                 // for ToppleOrder::Random
    std::uint64_t events_per_cell = 1'000'000;  // naive budget: this times the window area
    std::int64_t max_sweeps = 1'000'000;
    std::int64_t guard = 2;
    std::int64_t max_window_cells = 20'000'000;
};

struct RelaxReport {
    SandState stable;
    Odometer odometer;
    BigInt topple_events;
    std::int64_t sweeps = 0;
    Rect peak_window;
};

namespace detail {

/// Plane state restricted to a growable window, with cell type T.
template <class T>
class PlaneRelaxer {
public:
    PlaneRelaxer(const SandState& input, const RelaxOptions& opt)
        : spec_(input.sinks()), window_(input.window()), background_(input.background()), opt_(opt) {
        if (input.background() > 3)
            throw std::invalid_argument("background above 3 leaves an infinite unstable region");
        if (auto b = nonsink_bounds(spec_)) closure_ = b->expanded(1);
        val_.resize(static_cast<std::size_t>(window_.area()));
        odo_.assign(val_.size(), T(0));
        const auto& cells = input.cells();
        for (std::size_t i = 0; i < val_.size(); ++i) val_[i] = narrow<T>(cells.values()[i]);
        rebuild();
    }

    void run_bulk(RelaxReport& report) {
        if (unstable_in_band()) grow();
        for (;;) {
            const auto out = bulk_sweep(topo_, val_, odo_);
            if (!out.toppled) {
                if (!unstable_in_band()) break;
                const Rect before = window_;
                grow();
                if (window_ == before) throw Error("unstable cell on a window edge that cannot grow");
                continue;
            }
            if (++report.sweeps > opt_.max_sweeps)
                throw RelaxBudgetExceeded("bulk relaxation exceeded " + std::to_string(opt_.max_sweeps) + " sweeps");
            if (out.band) grow();
        }
    }

    void run_naive(RelaxReport& report) {
        std::mt19937_64 rng(opt_.seed);
        std::uint64_t events = 0;
        for (;;) {
            if (unstable_in_band()) grow();
            const auto budget = opt_.events_per_cell * static_cast<std::uint64_t>(window_.area());
            if (events >= budget) throw RelaxBudgetExceeded("naive relaxation exceeded its toppling budget");
            const auto out = naive_pass(topo_, val_, odo_, opt_.order, rng, budget - events);
            events += out.events;
            if (out.budget_exceeded) throw RelaxBudgetExceeded("naive relaxation exceeded its toppling budget");
            if (out.band) {
                grow();
                continue;
            }
            break;
        }
        (void)report;
    }

    void finish(RelaxReport& report) const {
        SandState stable(spec_, window_, background_);
        Odometer odo(window_, BigInt(0));
        BigInt total = 0;
        for (std::size_t i = 0; i < val_.size(); ++i) {
            if (topo_.flags[i] & kSink) continue;
            const Coord z = odo.coord(i);
            stable.set(z, to_bigint(val_[i]));
            BigInt f = to_bigint(odo_[i]);
            total += f;
            odo[z] = std::move(f);
        }
        report.stable = std::move(stable);
        report.odometer = std::move(odo);
        report.topple_events = std::move(total);
        report.peak_window = window_;
    }

private:
    [[nodiscard]] std::size_t idx(Coord z) const {
        return static_cast<std::size_t>((z.y - window_.y0) * window_.width() + (z.x - window_.x0));
    }

    void rebuild() {
        const std::int64_t w = window_.width(), h = window_.height();
        const std::size_t n = static_cast<std::size_t>(w * h);
        topo_.nbr.assign(n, Neighbours{-1, -1, -1, -1});
        topo_.flags.assign(n, 0);
        band_.clear();
        for (std::int64_t y = 0; y < h; ++y)
            for (std::int64_t x = 0; x < w; ++x) {
                const Coord z{window_.x0 + x, window_.y0 + y};
                const auto i = static_cast<std::size_t>(y * w + x);
                if (is_sink(spec_, z)) topo_.flags[i] |= kSink;
            }
        for (std::int64_t y = 0; y < h; ++y)
            for (std::int64_t x = 0; x < w; ++x) {
                const Coord z{window_.x0 + x, window_.y0 + y};
                const auto i = static_cast<std::size_t>(y * w + x);
                if (topo_.flags[i] & kSink) continue;
                for (std::size_t k = 0; k < 4; ++k) {
                    const Coord nz = z + kNeighbourOffsets[k];
                    if (!window_.contains(nz)) {
                        if (!is_sink(spec_, nz)) topo_.flags[i] |= kFrozen;
                        continue;
                    }
                    const auto j = idx(nz);
                    if (!(topo_.flags[j] & kSink)) topo_.nbr[i][k] = static_cast<std::int32_t>(j);
                }
                const std::int64_t edge = std::min({x, y, w - 1 - x, h - 1 - y});
                if (edge <= opt_.guard && live_cell_outside_nearby(z)) {
                    topo_.flags[i] |= kBand;
                    band_.push_back(i);
                }
            }
    }

    // Some non-sink cell outside the window lies within guard + 1 steps of z.
    [[nodiscard]] bool live_cell_outside_nearby(Coord z) {
        const std::int64_t r = opt_.guard + 1;
        bool found = false;
        for (std::int64_t dy = -r; dy <= r; ++dy)
            for (std::int64_t dx = -r; dx <= r; ++dx) {
                if (std::abs(dx) + std::abs(dy) > r) continue;
                const Coord nz{z.x + dx, z.y + dy};
                if (window_.contains(nz) || is_sink(spec_, nz)) continue;
                found = true;
                if (nz.x < window_.x0) grow_sides_[0] = true;
                if (nz.x > window_.x1) grow_sides_[1] = true;
                if (nz.y < window_.y0) grow_sides_[2] = true;
                if (nz.y > window_.y1) grow_sides_[3] = true;
            }
        return found;
    }

    [[nodiscard]] bool unstable_in_band() const {
        const T four(4);
        for (const auto i : band_)
            if (val_[i] >= four) return true;
        return false;
    }

    void grow() {
        const std::int64_t dx = std::max<std::int64_t>(8, window_.width() / 2);
        const std::int64_t dy = std::max<std::int64_t>(8, window_.height() / 2);
        Rect next = window_;
        if (grow_sides_[0]) next.x0 -= dx;
        if (grow_sides_[1]) next.x1 += dx;
        if (grow_sides_[2]) next.y0 -= dy;
        if (grow_sides_[3]) next.y1 += dy;
        if (closure_) next = next.intersected(*closure_).united(window_);
        if (next == window_) return;
        if (next.area() > opt_.max_window_cells)
            throw RelaxBudgetExceeded("relaxation window exceeded " + std::to_string(opt_.max_window_cells) +
                                      " cells");
        std::vector<T> val(static_cast<std::size_t>(next.area()), T(0));
        std::vector<T> odo(val.size(), T(0));
        const T bg(background_);
        for (std::int64_t y = next.y0; y <= next.y1; ++y)
            for (std::int64_t x = next.x0; x <= next.x1; ++x) {
                const Coord z{x, y};
                const auto j = static_cast<std::size_t>((y - next.y0) * next.width() + (x - next.x0));
                if (window_.contains(z)) {
                    val[j] = val_[idx(z)];
                    odo[j] = odo_[idx(z)];
                } else if (!is_sink(spec_, z)) {
                    val[j] = bg;
                }
            }
        window_ = next;
        val_ = std::move(val);
        odo_ = std::move(odo);
        grow_sides_ = {false, false, false, false};
        rebuild();
    }

    SinkSpec spec_;
    Rect window_;
    std::int64_t background_;
    RelaxOptions opt_;
    std::optional<Rect> closure_;
    std::vector<T> val_, odo_;
    Topology topo_;
    std::vector<std::size_t> band_;
    std::array<bool, 4> grow_sides_{false, false, false, false};
};

template <class T>
RelaxReport relax_plane(const SandState& input, const RelaxOptions& opt, bool bulk) {
    RelaxReport report;
    PlaneRelaxer<T> relaxer(input, opt);
    if (bulk)
        relaxer.run_bulk(report);
    else
        relaxer.run_naive(report);
    relaxer.finish(report);
    return report;
}

}  // namespace detail

/// Single topplings from a FIFO queue (or uniformly random order) until
/// every non-sink cell holds at most 3 grains.
inline RelaxReport relax_naive(const SandState& input, const RelaxOptions& opt = {}) {
    return detail::with_promotion([&]<class T>() { return detail::relax_plane<T>(input, opt, false); });
}

/// Row-major sweeps in which every unstable cell topples floor(v/4) times
/// at once. Produces exactly the stable state and odometer of relax_naive.
inline RelaxReport relax_bulk(const SandState& input, const RelaxOptions& opt = {}) {
    return detail::with_promotion([&]<class T>() { return detail::relax_plane<T>(input, opt, true); });
}

struct CertificateCheck {
    bool ok = true;
    std::optional<Coord> cell;
    std::string reason;
    explicit operator bool() const { return ok; }
};

/// Verifies stability, stable = input + Delta F at every cell, and F = 0 on
/// sinks and beyond the window. Minimality of F is not checked here.
inline CertificateCheck check_relaxation_certificate(const SandState& input, const RelaxReport& report) {
    auto fail = [](Coord z, std::string why) { return CertificateCheck{false, z, std::move(why)}; };
    const SandState& out = report.stable;
    const Rect& win = out.window();
    if (!(out.sinks() == input.sinks())) return {false, std::nullopt, "sink specs differ"};
    if (out.background() != input.background()) return {false, std::nullopt, "backgrounds differ"};
    if (!win.contains(input.window())) return {false, std::nullopt, "report window does not cover the input"};
    if (report.odometer.window() != win) return {false, std::nullopt, "odometer window differs from state window"};
    if (out.background() > 3) return {false, std::nullopt, "background is unstable"};

    const SinkSpec& spec = out.sinks();
    auto F = [&](Coord z) -> BigInt { return win.contains(z) ? report.odometer[z] : BigInt(0); };
    for (std::size_t i = 0; i < report.odometer.size(); ++i) {
        const Coord z = report.odometer.coord(i);
        const BigInt& f = report.odometer.values()[i];
        if (is_sink(spec, z)) {
            if (f != 0) return fail(z, "odometer nonzero on a sink");
            continue;
        }
        if (f < 0) return fail(z, "negative odometer");
        const BigInt s = out.at(z);
        if (s > 3 || s < 0) return fail(z, "cell is not stable");
        BigInt lap = -4 * f;
        for (const Coord off : kNeighbourOffsets) {
            const Coord nz = z + off;
            if (!is_sink(spec, nz)) lap += F(nz);
        }
        if (s != input.at(z) + lap) return fail(z, "conservation identity violated");
        // Grains sent to a live cell beyond the window would be unaccounted.
        for (const Coord off : kNeighbourOffsets) {
            const Coord nz = z + off;
            if (!win.contains(nz) && !is_sink(spec, nz) && f != 0)
                return fail(z, "toppling on the window edge feeds cells outside the window");
        }
    }
    return {};
}

}  // namespace sandpile
