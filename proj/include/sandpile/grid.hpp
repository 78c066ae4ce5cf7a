#pragma once
// Dense windowed storage: Grid<T>, and the SandState / Odometer value types
// built on it. Cells outside the window take a constant background value.

#include "sandpile/bigint.hpp"
#include "sandpile/lattice.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sandpile {

template <class T>
class Grid {
public:
    Grid() = default;
    explicit Grid(Rect window, const T& fill = T{})
        : window_(window), data_(static_cast<std::size_t>(window.area()), fill) {}

    [[nodiscard]] const Rect& window() const { return window_; }
    [[nodiscard]] std::size_t size() const { return data_.size(); }

    [[nodiscard]] std::size_t index(Coord z) const {
        return static_cast<std::size_t>((z.y - window_.y0) * window_.width() + (z.x - window_.x0));
    }
    [[nodiscard]] Coord coord(std::size_t i) const {
        const auto w = window_.width();
        return {window_.x0 + static_cast<std::int64_t>(i) % w, window_.y0 + static_cast<std::int64_t>(i) / w};
    }

    T& operator[](Coord z) { return data_[index(z)]; }
    const T& operator[](Coord z) const { return data_[index(z)]; }

    std::span<T> values() { return data_; }
    [[nodiscard]] std::span<const T> values() const { return data_; }

    /// Copy into a window containing this one; new cells get `fill`.
    [[nodiscard]] Grid resized(const Rect& bigger, const T& fill) const {
        if (!bigger.contains(window_)) throw std::invalid_argument("resized: window must grow");
        Grid out(bigger, fill);
        for (std::int64_t y = window_.y0; y <= window_.y1; ++y)
            for (std::int64_t x = window_.x0; x <= window_.x1; ++x) out[{x, y}] = (*this)[{x, y}];
        return out;
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    Rect window_;
    std::vector<T> data_;
};

/// Per-cell toppling counts; zero outside the window and on sinks.
using Odometer = Grid<BigInt>;

/// Non-negative grain counts on the non-sink cells of Z^2. Inside the window
/// values are stored; outside, non-sink cells hold `background`.
class SandState {
public:
    SandState() : SandState(sinks::PeriodicLattice{}, Rect{0, 0, 0, 0}) {}
    SandState(SinkSpec sinks, Rect window, std::int64_t background = 0)
        : sinks_(std::move(sinks)), background_(background), cells_(window, BigInt(0)) {
        validate(sinks_);
        if (window.empty()) throw std::invalid_argument("state window is empty");
        if (background < 0) throw std::invalid_argument("background must be non-negative");
        if (background != 0)
            for (std::size_t i = 0; i < cells_.size(); ++i)
                if (!is_sink(sinks_, cells_.coord(i))) cells_.values()[i] = background;
    }

    [[nodiscard]] const SinkSpec& sinks() const { return sinks_; }
    [[nodiscard]] const Rect& window() const { return cells_.window(); }
    [[nodiscard]] std::int64_t background() const { return background_; }
    [[nodiscard]] const Grid<BigInt>& cells() const { return cells_; }

    /// Value at any coordinate: 0 at sinks, background outside the window.
    [[nodiscard]] BigInt at(Coord z) const {
        if (is_sink(sinks_, z)) return 0;
        if (!window().contains(z)) return background_;
        return cells_[z];
    }

    /// Grains placed on a sink vanish.
    void set(Coord z, BigInt v) {
        if (!window().contains(z)) throw std::out_of_range("set: coordinate outside the state window");
        if (v < 0) throw std::invalid_argument("set: negative grain count");
        cells_[z] = is_sink(sinks_, z) ? BigInt(0) : std::move(v);
    }

    void add(Coord z, const BigInt& v) { set(z, cells_[z] + v); }

    /// True when every non-sink cell (including the background) holds < 4.
    [[nodiscard]] bool is_stable() const {
        if (background_ > 3) return false;
        for (const auto& v : cells_.values())
            if (v > 3) return false;
        return true;
    }

    friend bool operator==(const SandState&, const SandState&) = default;

private:
    SinkSpec sinks_;
    std::int64_t background_ = 0;
    Grid<BigInt> cells_;
};

}  // namespace sandpile
