#pragma once
// Big-pile experiments: drop N grains on one cell, relax, measure the
// toppled region against circles, and render the stable state.

#include "sandpile/bigint.hpp"
#include "sandpile/grid.hpp"
#include "sandpile/lattice.hpp"
#include "sandpile/relax.hpp"
#include "sandpile/state_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace sandpile {

struct Radii {
    double inner = 0;
    double outer = 0;
};

struct PileReport {
    BigInt grains = 0;
    Coord center;
    SinkSpec sinks;
    Radii toppled;   // D  = {F > 0} + center
    Radii nonzero;   // D' = {state != 0} with holes filled, + center
    BigInt topple_events = 0;
    std::int64_t sweeps = 0;
    Rect window;
    double wall_time = 0;  // seconds
    std::vector<std::string> artifacts;
};

namespace detail {

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

// outer: farthest member; inner: distance of the nearest non-sink
// non-member, the supremum of radii whose disk lies in the set.
template <class InSet>
Radii radii_of(const SinkSpec& spec, const Rect& window, Coord c, InSet&& in_set) {
    double outer2 = 0, inner2 = std::numeric_limits<double>::infinity();
    const Rect scan = window.expanded(1);
    for (std::int64_t y = scan.y0; y <= scan.y1; ++y)
        for (std::int64_t x = scan.x0; x <= scan.x1; ++x) {
            const Coord z{x, y};
            const double dx = static_cast<double>(x - c.x), dy = static_cast<double>(y - c.y);
            const double d2 = dx * dx + dy * dy;
            const bool member = z == c || (window.contains(z) && !is_sink(spec, z) && in_set(z));
            if (member)
                outer2 = std::max(outer2, d2);
            else if (!is_sink(spec, z))
                inner2 = std::min(inner2, d2);
        }
    Radii r{round2(std::sqrt(inner2)), round2(std::sqrt(outer2))};
    // the center alone: nothing is enclosed
    if (r.outer == 0) r.inner = 0;
    r.inner = std::min(r.inner, r.outer);
    return r;
}

}  // namespace detail

/// Radii of D = {F > 0} + {center}. The odometer window must contain the
/// toppled set (relaxation reports guarantee it).
inline Radii measure_radii(const SinkSpec& spec, const Odometer& odo, Coord center) {
    return detail::radii_of(spec, odo.window(), center, [&](Coord z) { return odo[z] > 0; });
}

/// Same measurement for D' = the non-zero cells with their holes filled:
/// every cell not reachable from outside the window through zero cells
/// (sinks count as zero), plus the center.
inline Radii measure_nonzero_radii(const SandState& st, Coord center) {
    const Rect w = st.window().expanded(1);
    Grid<char> outside(w, 0);
    std::vector<Coord> stack;
    for (std::int64_t x = w.x0; x <= w.x1; ++x)
        for (const std::int64_t y : {w.y0, w.y1}) stack.push_back({x, y});
    for (std::int64_t y = w.y0; y <= w.y1; ++y)
        for (const std::int64_t x : {w.x0, w.x1}) stack.push_back({x, y});
    while (!stack.empty()) {
        const Coord z = stack.back();
        stack.pop_back();
        if (!w.contains(z) || outside[z] || st.at(z) != 0) continue;
        outside[z] = 1;
        for (const Coord off : kNeighbourOffsets) stack.push_back(z + off);
    }
    return detail::radii_of(st.sinks(), st.window(), center, [&](Coord z) { return !outside[z]; });
}

struct BigPileRun {
    PileReport report;
    RelaxReport relax;
};

inline BigPileRun run_bigpile(const BigInt& grains, Coord center, const SinkSpec& spec,
                              const RelaxOptions& opt = {}) {
    if (grains < 1) throw std::invalid_argument("grains must be >= 1");
    if (!cnet_radius(spec)) throw std::invalid_argument("sink spec is not a C-net");
    SandState st(spec, Rect::around(center, 8), 0);
    if (is_sink(spec, center)) throw std::invalid_argument("center is a sink");
    st.set(center, grains);
    const auto t0 = std::chrono::steady_clock::now();
    BigPileRun run{{}, relax_bulk(st, opt)};
    const auto t1 = std::chrono::steady_clock::now();
    PileReport& r = run.report;
    r.grains = grains;
    r.center = center;
    r.sinks = spec;
    r.toppled = measure_radii(spec, run.relax.odometer, center);
    r.nonzero = measure_nonzero_radii(run.relax.stable, center);
    r.topple_events = run.relax.topple_events;
    r.sweeps = run.relax.sweeps;
    r.window = run.relax.stable.window();
    r.wall_time = std::chrono::duration<double>(t1 - t0).count();
    return run;
}

inline Json pile_report_json(const PileReport& r) {
    Json j;
    j["grains"] = to_decimal(r.grains);
    j["center"] = Json::array({r.center.x, r.center.y});
    j["sink_spec"] = sink_spec_to_json(r.sinks);
    j["inner_radius"] = r.toppled.inner;
    j["outer_radius"] = r.toppled.outer;
    j["measurement"] = "toppled set {F > 0} plus center, Euclidean";
    j["nonzero_measurement"] = "non-zero cells with enclosed zeros filled, plus center, Euclidean";
    j["nonzero_inner_radius"] = r.nonzero.inner;
    j["nonzero_outer_radius"] = r.nonzero.outer;
    j["topple_events"] = to_decimal(r.topple_events);
    j["sweeps"] = std::to_string(r.sweeps);
    j["window"] = Json::array({r.window.x0, r.window.y0, r.window.x1, r.window.y1});
    j["wall_time"] = r.wall_time;
    j["artifacts"] = r.artifacts;
    return j;
}

// ---- figures ----

enum class FigureFormat { Ascii, Pgm, Svg };

inline FigureFormat parse_figure_format(const std::string& s) {
    if (s == "ascii") return FigureFormat::Ascii;
    if (s == "pgm") return FigureFormat::Pgm;
    if (s == "svg") return FigureFormat::Svg;
    throw std::invalid_argument("unsupported figure format '" + s + "' (use ascii, pgm or svg)");
}

struct Overlay {
    double cx = 0, cy = 0, radius = 0;
};

struct FigureOptions {
    std::optional<Rect> region;      // default: the state window
    std::optional<Overlay> overlay;
    int pgm_scale = 1;               // pixels per cell
    int svg_cell = 10;
};

/// -1 for sinks, else the grain count (stable states: 0..3).
inline int cell_class(const SandState& st, Coord z) {
    if (is_sink(st.sinks(), z)) return -1;
    const BigInt v = st.at(z);
    if (v > 3) throw std::invalid_argument("figures need a stable state");
    return static_cast<int>(v);
}

inline constexpr char kAsciiGlyph[5] = {'x', ' ', 'o', '#', '+'};
inline constexpr int kPgmGray[5] = {64, 255, 192, 0, 128};
inline constexpr int kPgmOverlay = 32;

inline std::string render_figure(const SandState& st, FigureFormat fmt, const FigureOptions& opt = {}) {
    const Rect r = opt.region.value_or(st.window());
    if (r.empty()) throw std::invalid_argument("figure region is empty");
    std::ostringstream o;
    auto on_circle = [&](double x, double y, double half) {
        if (!opt.overlay) return false;
        const double d = std::hypot(x - opt.overlay->cx, y - opt.overlay->cy);
        return std::abs(d - opt.overlay->radius) <= half;
    };
    // top row is the largest y
    switch (fmt) {
        case FigureFormat::Ascii:
            for (std::int64_t y = r.y1; y >= r.y0; --y) {
                for (std::int64_t x = r.x0; x <= r.x1; ++x) o << kAsciiGlyph[cell_class(st, {x, y}) + 1];
                o << '\n';
            }
            break;
        case FigureFormat::Pgm: {
            const int s = std::max(1, opt.pgm_scale);
            o << "P2\n" << r.width() * s << ' ' << r.height() * s << "\n255\n";
            for (std::int64_t y = r.y1; y >= r.y0; --y)
                for (int sy = 0; sy < s; ++sy) {
                    for (std::int64_t x = r.x0; x <= r.x1; ++x) {
                        const int g = kPgmGray[cell_class(st, {x, y}) + 1];
                        for (int sx = 0; sx < s; ++sx) {
                            const double px = static_cast<double>(x) - 0.5 + (sx + 0.5) / s;
                            const double py = static_cast<double>(y) + 0.5 - (sy + 0.5) / s;
                            if (x > r.x0 || sx > 0) o << ' ';
                            o << (on_circle(px, py, 0.5 / s) ? kPgmOverlay : g);
                        }
                    }
                    o << '\n';
                }
            break;
        }
        case FigureFormat::Svg: {
            const int c = std::max(4, opt.svg_cell);
            const double h = c / 2.0;
            o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << r.width() * c << "\" height=\""
              << r.height() * c << "\" viewBox=\"0 0 " << r.width() * c << ' ' << r.height() * c << "\">\n";
            o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
            o << "<g stroke=\"black\" stroke-width=\"" << c / 10.0 << "\" fill=\"none\">\n";
            for (std::int64_t y = r.y1; y >= r.y0; --y)
                for (std::int64_t x = r.x0; x <= r.x1; ++x) {
                    const double cx = static_cast<double>(x - r.x0) * c + h;
                    const double cy = static_cast<double>(r.y1 - y) * c + h;
                    const double a = c * 0.35;
                    switch (cell_class(st, {x, y})) {
                        case -1:
                            o << "<path class=\"sink\" d=\"M" << cx - a << ' ' << cy - a << "L" << cx + a << ' '
                              << cy + a << "M" << cx - a << ' ' << cy + a << "L" << cx + a << ' ' << cy - a
                              << "\"/>\n";
                            break;
                        case 0:
                            break;
                        case 1:
                            o << "<circle class=\"g1\" cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << a << "\"/>\n";
                            break;
                        case 2:
                            o << "<rect class=\"g2\" x=\"" << cx - a << "\" y=\"" << cy - a << "\" width=\"" << 2 * a
                              << "\" height=\"" << 2 * a << "\" fill=\"black\"/>\n";
                            break;
                        default:
                            o << "<path class=\"g3\" d=\"M" << cx - a << ' ' << cy << "L" << cx + a << ' ' << cy
                              << "M" << cx << ' ' << cy - a << "L" << cx << ' ' << cy + a << "\"/>\n";
                    }
                }
            o << "</g>\n";
            if (opt.overlay)
                o << "<circle class=\"overlay\" cx=\"" << (opt.overlay->cx - static_cast<double>(r.x0)) * c + h
                  << "\" cy=\"" << (static_cast<double>(r.y1) - opt.overlay->cy) * c + h << "\" r=\""
                  << opt.overlay->radius * c << "\" stroke=\"red\" fill=\"none\" stroke-width=\"" << c / 8.0
                  << "\"/>\n";
            o << "</svg>\n";
            break;
        }
    }
    return o.str();
}

struct PgmImage {
    int width = 0, height = 0, maxval = 255;
    std::vector<int> pixels;  // row-major, top row first
};

inline PgmImage read_pgm(std::istream& in) {
    PgmImage img;
    std::string magic;
    auto next_int = [&]() {
        in >> std::ws;
        while (in.peek() == '#') {
            std::string skip;
            std::getline(in, skip);
            in >> std::ws;
        }
        int v = 0;
        if (!(in >> v)) throw FormatError("truncated PGM");
        return v;
    };
    if (!(in >> magic) || magic != "P2") throw FormatError("not a P2 PGM file");
    img.width = next_int();
    img.height = next_int();
    img.maxval = next_int();
    if (img.width <= 0 || img.height <= 0 || img.maxval <= 0) throw FormatError("bad PGM header");
    img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
    for (auto& p : img.pixels) p = next_int();
    return img;
}

/// Cell classes (-1 sink, 0..3) recovered from a figure rendered with
/// `scale` pixels per cell, top row first. Pixels under an overlay are
/// skipped in favour of any other pixel of the cell.
inline std::vector<std::vector<int>> pgm_cell_classes(const PgmImage& img, int scale = 1) {
    if (scale < 1 || img.width % scale != 0 || img.height % scale != 0)
        throw FormatError("PGM size is not a multiple of the cell scale");
    std::vector<std::vector<int>> out(static_cast<std::size_t>(img.height / scale),
                                      std::vector<int>(static_cast<std::size_t>(img.width / scale), 0));
    for (int cy = 0; cy < img.height / scale; ++cy)
        for (int cx = 0; cx < img.width / scale; ++cx) {
            std::optional<int> cls;
            for (int sy = 0; sy < scale && !cls; ++sy)
                for (int sx = 0; sx < scale && !cls; ++sx) {
                    const int g = img.pixels[static_cast<std::size_t>((cy * scale + sy) * img.width + cx * scale + sx)];
                    for (int k = 0; k < 5; ++k)
                        if (kPgmGray[k] == g) cls = k - 1;
                }
            if (!cls) throw FormatError("PGM cell has no recognised gray level");
            out[static_cast<std::size_t>(cy)][static_cast<std::size_t>(cx)] = *cls;
        }
    return out;
}

}  // namespace sandpile
