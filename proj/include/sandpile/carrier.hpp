#pragma once
// Finite graphs on which group computations run exactly: torus quotients
// Z_m x Z_n with sinks, sink specs whose non-sink set is finite, and plane
// windows whose outside is treated as sink.

#include "sandpile/bigint.hpp"
#include "sandpile/detail/kernel.hpp"
#include "sandpile/grid.hpp"
#include "sandpile/lattice.hpp"
#include "sandpile/relax.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sandpile {

/// Grain counts on the vertices of a FiniteSandpile, in vertex order.
using Config = std::vector<std::int64_t>;

struct CarrierRelax {
    Config stable;
    std::vector<BigInt> odometer;
    BigInt topple_events;
};

class FiniteSandpile {
public:
    enum class Kind { Torus, Finite, Window };

    /// Z_m x Z_n with the listed sinks. When m or n is 2 the wraparound
    /// produces double edges, so every vertex keeps degree 4.
    static FiniteSandpile torus(std::int64_t m, std::int64_t n, std::vector<Coord> sink_cells) {
        auto tq = make_torus_quotient(m, n, std::move(sink_cells));
        validate(tq);
        FiniteSandpile g;
        g.kind_ = Kind::Torus;
        g.spec_ = tq;
        g.rect_ = {0, 0, m - 1, n - 1};
        g.build([&](Coord z) { return Coord{floor_mod(z.x, m), floor_mod(z.y, n)}; });
        return g;
    }

    /// Non-sink cells of `spec` inside `window`; cells outside count as sinks.
    static FiniteSandpile window(const SinkSpec& spec, const Rect& window) {
        validate(spec);
        if (window.empty()) throw std::invalid_argument("carrier window is empty");
        FiniteSandpile g;
        g.kind_ = Kind::Window;
        g.spec_ = spec;
        g.rect_ = window;
        if (auto b = nonsink_bounds(spec); b && window.contains(*b)) g.kind_ = Kind::Finite;
        g.build([](Coord z) { return z; });
        return g;
    }

    /// Exact carrier for a spec with finitely many non-sink cells.
    static FiniteSandpile finite(const SinkSpec& spec) {
        const auto b = nonsink_bounds(spec);
        if (!b) throw std::invalid_argument("sink spec has infinitely many non-sink cells");
        return window(spec, *b);
    }

    /// Exact carrier when the spec allows it (torus quotient or finite
    /// non-sink set), else the window carrier over `fallback`.
    static FiniteSandpile for_spec(const SinkSpec& spec, const Rect& fallback) {
        if (const auto* t = std::get_if<sinks::TorusQuotient>(&spec)) return torus(t->m, t->n, t->sinks);
        if (nonsink_bounds(spec)) return finite(spec);
        return window(spec, fallback);
    }

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] bool exact() const { return kind_ != Kind::Window; }
    [[nodiscard]] const SinkSpec& spec() const { return spec_; }
    /// Fundamental domain (torus) or the window holding the vertices.
    [[nodiscard]] const Rect& rect() const { return rect_; }
    [[nodiscard]] std::size_t size() const { return cells_.size(); }
    [[nodiscard]] const std::vector<Coord>& cells() const { return cells_; }
    [[nodiscard]] const detail::Topology& topology() const { return topo_; }
    [[nodiscard]] const Config& beta() const { return beta_; }

    /// Vertex index of z (reduced mod the periods on a torus), if not a sink.
    [[nodiscard]] std::optional<std::size_t> index_of(Coord z) const {
        if (kind_ == Kind::Torus) z = {floor_mod(z.x, rect_.width()), floor_mod(z.y, rect_.height())};
        if (!rect_.contains(z)) return std::nullopt;
        const auto k = slot_[static_cast<std::size_t>((z.y - rect_.y0) * rect_.width() + (z.x - rect_.x0))];
        if (k < 0) return std::nullopt;
        return static_cast<std::size_t>(k);
    }

    /// Values of `st` at the carrier's vertices.
    [[nodiscard]] std::vector<BigInt> read(const SandState& st) const {
        std::vector<BigInt> out;
        out.reserve(cells_.size());
        for (const Coord z : cells_) out.push_back(st.at(z));
        return out;
    }

    [[nodiscard]] Config read_config(const SandState& st) const {
        Config out;
        out.reserve(cells_.size());
        for (const Coord z : cells_) out.push_back(narrow<std::int64_t>(st.at(z)));
        return out;
    }

    /// SandState over rect() with zero background.
    template <class V>
    [[nodiscard]] SandState to_state(const std::vector<V>& values) const {
        check_size(values.size());
        SandState st(spec_, rect_, 0);
        for (std::size_t i = 0; i < cells_.size(); ++i) st.set(cells_[i], BigInt(values[i]));
        return st;
    }

    [[nodiscard]] CarrierRelax relax(std::span<const std::int64_t> x, const RelaxOptions& opt = {},
                                     bool naive = false) const {
        std::vector<BigInt> big(x.begin(), x.end());
        return relax(big, opt, naive);
    }

    [[nodiscard]] CarrierRelax relax(const std::vector<BigInt>& x, const RelaxOptions& opt = {},
                                     bool naive = false) const {
        check_size(x.size());
        return detail::with_promotion([&]<class T>() { return run<T>(x, opt, naive); });
    }

    /// Stable part only; bulk strategy.
    [[nodiscard]] Config stabilize(std::span<const std::int64_t> x) const { return relax(x).stable; }

    /// Topples every vertex holding at least floor + 4 until none does. Cells
    /// that start at or above floor stay there.
    [[nodiscard]] std::vector<BigInt> partial_relax(const std::vector<BigInt>& x, const BigInt& floor) const {
        check_size(x.size());
        return detail::with_promotion([&]<class T>() {
            std::vector<T> val(x.size()), odo(x.size(), T(0));
            for (std::size_t i = 0; i < x.size(); ++i) val[i] = narrow<T>(x[i]);
            const T f = narrow<T>(floor);
            while (detail::bulk_sweep(topo_, val, odo, f).toppled) {
            }
            std::vector<BigInt> out;
            out.reserve(val.size());
            for (const auto& v : val) out.push_back(to_bigint(v));
            return out;
        });
    }

    void check_size(std::size_t n) const {
        if (n != cells_.size())
            throw std::invalid_argument("configuration has " + std::to_string(n) + " entries, carrier has " +
                                        std::to_string(cells_.size()) + " vertices");
    }

private:
    template <class Reduce>
    void build(Reduce&& reduce) {
        const std::int64_t w = rect_.width(), h = rect_.height();
        slot_.assign(static_cast<std::size_t>(w * h), -1);
        for (std::int64_t y = rect_.y0; y <= rect_.y1; ++y)
            for (std::int64_t x = rect_.x0; x <= rect_.x1; ++x) {
                const Coord z{x, y};
                if (is_sink(spec_, z)) continue;
                slot_[static_cast<std::size_t>((y - rect_.y0) * w + (x - rect_.x0))] =
                    static_cast<std::int32_t>(cells_.size());
                cells_.push_back(z);
            }
        topo_.nbr.assign(cells_.size(), detail::Neighbours{-1, -1, -1, -1});
        topo_.flags.assign(cells_.size(), 0);
        beta_.assign(cells_.size(), 0);
        for (std::size_t i = 0; i < cells_.size(); ++i)
            for (std::size_t k = 0; k < 4; ++k) {
                const Coord nz = reduce(cells_[i] + kNeighbourOffsets[k]);
                const auto j = index_of(nz);
                if (j)
                    topo_.nbr[i][k] = static_cast<std::int32_t>(*j);
                else
                    ++beta_[i];
            }
    }

    template <class T>
    CarrierRelax run(const std::vector<BigInt>& x, const RelaxOptions& opt, bool naive) const {
        std::vector<T> val(x.size()), odo(x.size(), T(0));
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] < 0) throw std::invalid_argument("relax: negative grain count");
            val[i] = narrow<T>(x[i]);
        }
        if (naive) {
            std::mt19937_64 rng(opt.seed);
            const auto budget = opt.events_per_cell * std::max<std::uint64_t>(1, cells_.size());
            if (detail::naive_pass(topo_, val, odo, opt.order, rng, budget).budget_exceeded)
                throw RelaxBudgetExceeded("naive relaxation exceeded its toppling budget");
        } else {
            std::int64_t sweeps = 0;
            while (detail::bulk_sweep(topo_, val, odo).toppled)
                if (++sweeps > opt.max_sweeps) throw RelaxBudgetExceeded("bulk relaxation exceeded its sweep budget");
        }
        CarrierRelax out;
        out.stable.reserve(val.size());
        out.odometer.reserve(val.size());
        for (std::size_t i = 0; i < val.size(); ++i) {
            out.stable.push_back(static_cast<std::int64_t>(val[i]));
            out.odometer.push_back(to_bigint(odo[i]));
            out.topple_events += out.odometer.back();
        }
        return out;
    }

    Kind kind_ = Kind::Finite;
    SinkSpec spec_;
    Rect rect_;
    std::vector<Coord> cells_;
    std::vector<std::int32_t> slot_;
    detail::Topology topo_;
    Config beta_;
};

/// Z_m x Z_n with sinks: the finite quotient hosting periodic states.
class TorusSandpile : public FiniteSandpile {
public:
    TorusSandpile(std::int64_t m, std::int64_t n, std::vector<Coord> sink_cells)
        : FiniteSandpile(torus(m, n, std::move(sink_cells))) {}
    explicit TorusSandpile(const sinks::PeriodicLattice& p) : TorusSandpile(p.m, p.n, {{0, 0}}) {}

    [[nodiscard]] std::int64_t m() const { return rect().width(); }
    [[nodiscard]] std::int64_t n() const { return rect().height(); }
};

}  // namespace sandpile
