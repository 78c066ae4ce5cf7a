#pragma once
// Bounded solutions of Delta phi = psi by the monotone iteration
// phi <- (sum of neighbours - psi) / 4 started from L h. Values are dyadic
// fixed point numbers (scale 2^bits) and each step rounds up, which keeps
// the iteration monotone, keeps phi >= -L h exactly, and ends at an exact
// fixed point whose residual is below 4 units of the scale.

#include "sandpile/bigint.hpp"
#include "sandpile/carrier.hpp"
#include "sandpile/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <vector>

namespace sandpile {

struct PoissonOptions {
    int scale_bits = 40;                  // tolerance 2^-scale_bits
    std::int64_t max_sweeps = 10'000'000;
    std::int64_t margin = 16;             // initial padding for plane problems
    std::int64_t max_margin = 1024;
};

struct PoissonResult {
    FiniteSandpile carrier;
    int scale_bits = 40;
    std::vector<BigInt> numerators;  // phi * 2^scale_bits, carrier vertex order
    std::vector<double> phi;
    std::vector<BigInt> h;           // the superharmonic bound used
    std::int64_t C = 0;
    BigInt L = 0;                    // max |psi|
    std::int64_t sweeps = 0;
    bool monotone = true;            // every part nonincreasing at every step
    bool bounded = true;             // every iterate within -L h .. L h
    double max_residual = 0;         // max |Delta phi - psi| over the carrier
};

namespace detail {

/// Graph distances to the sink set inside the carrier (1 for vertices with a
/// sink neighbour).
inline std::vector<std::int64_t> carrier_distances(const FiniteSandpile& g) {
    std::vector<std::int64_t> d(g.size(), -1);
    std::deque<std::size_t> q;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.beta()[i] > 0) {
            d[i] = 1;
            q.push_back(i);
        }
    while (!q.empty()) {
        const auto i = q.front();
        q.pop_front();
        for (const auto j : g.topology().nbr[i])
            if (j >= 0 && d[static_cast<std::size_t>(j)] < 0) {
                d[static_cast<std::size_t>(j)] = d[i] + 1;
                q.push_back(static_cast<std::size_t>(j));
            }
    }
    for (const auto v : d)
        if (v < 0) throw std::invalid_argument("carrier has vertices not connected to a sink");
    return d;
}

inline Int128 ceil_div4(Int128 a) { return a >= 0 ? (a + 3) / 4 : -((-a) / 4); }

// Solves Delta phi = psi for psi >= 0 with psi <= L; returns numerators.
inline std::vector<Int128> monotone_part(const FiniteSandpile& g, const std::vector<Int128>& psi_scaled,
                                         const std::vector<Int128>& start, const std::vector<Int128>& lower,
                                         const PoissonOptions& opt, PoissonResult& rep) {
    std::vector<Int128> cur = start, next(cur.size());
    const auto& nbr = g.topology().nbr;
    for (;;) {
        if (++rep.sweeps > opt.max_sweeps) throw Error("Poisson iteration did not converge within the sweep cap");
        bool changed = false;
        for (std::size_t i = 0; i < cur.size(); ++i) {
            Int128 acc = -psi_scaled[i];
            for (const auto j : nbr[i])
                if (j >= 0) acc += cur[static_cast<std::size_t>(j)];
            next[i] = ceil_div4(acc);
            if (next[i] > cur[i]) rep.monotone = false;
            if (next[i] < lower[i] || next[i] > start[i]) rep.bounded = false;
            if (next[i] != cur[i]) changed = true;
        }
        cur.swap(next);
        if (!changed) return cur;
    }
}

}  // namespace detail

/// Solves on a finite carrier. On a torus this is the periodic plane
/// problem; on a window carrier the outside acts as sink.
inline PoissonResult poisson_solve(const FiniteSandpile& g, const std::vector<BigInt>& psi,
                                   const PoissonOptions& opt = {}) {
    g.check_size(psi.size());
    if (opt.scale_bits < 1 || opt.scale_bits > 60) throw std::invalid_argument("scale_bits must lie in [1, 60]");
    PoissonResult rep;
    rep.carrier = g;
    rep.scale_bits = opt.scale_bits;
    const auto dist = detail::carrier_distances(g);
    rep.C = *std::max_element(dist.begin(), dist.end());
    BigInt Lp = 0, Lm = 0;
    for (const auto& v : psi) {
        Lp = std::max(Lp, v);
        Lm = std::max(Lm, BigInt(-v));
    }
    rep.L = std::max(Lp, Lm);
    for (const auto d : dist) rep.h.push_back(superharmonic_h_at_distance(d, rep.C));

    const BigInt S = BigInt(1) << opt.scale_bits;
    const BigInt hmax = *std::max_element(rep.h.begin(), rep.h.end());
    if (S * rep.L * hmax * 8 >= BigInt(1) << 120) throw OverflowError();

    auto solve = [&](const BigInt& Lpart, int sign) {
        std::vector<Int128> ps(g.size()), start(g.size()), lower(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const BigInt v = sign > 0 ? std::max(BigInt(0), psi[i]) : std::max(BigInt(0), BigInt(-psi[i]));
            ps[i] = narrow<Int128>(v * S);
            start[i] = narrow<Int128>(Lpart * rep.h[i] * S);
            lower[i] = -start[i];
        }
        if (Lpart == 0) return std::vector<Int128>(g.size(), 0);
        return detail::monotone_part(g, ps, start, lower, opt, rep);
    };
    const auto plus = solve(Lp, +1);
    const auto minus = solve(Lm, -1);
    const double scale = std::ldexp(1.0, -opt.scale_bits);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const BigInt num = to_bigint(plus[i]) - to_bigint(minus[i]);
        rep.numerators.push_back(num);
        rep.phi.push_back(num.convert_to<double>() * scale);
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        BigInt acc = -4 * rep.numerators[i];
        for (const auto j : g.topology().nbr[i])
            if (j >= 0) acc += rep.numerators[static_cast<std::size_t>(j)];
        acc -= psi[i] * S;
        rep.max_residual = std::max(rep.max_residual, std::abs(acc.convert_to<double>()) * scale);
    }
    return rep;
}

/// Plane problem with psi given on `window` (row-major, zero outside). The
/// carrier is the window padded by a margin that doubles until phi on the
/// outer ring is at most 4 units of the scale, so the truncation error of
/// the residual just outside the carrier stays below 16 units.
inline PoissonResult poisson_solve_plane(const SinkSpec& spec, const Rect& window, const std::vector<BigInt>& psi,
                                         const PoissonOptions& opt = {}) {
    if (psi.size() != static_cast<std::size_t>(window.area()))
        throw std::invalid_argument("psi size does not match the window");
    for (std::int64_t margin = opt.margin;; margin *= 2) {
        if (margin > opt.max_margin) throw Error("Poisson solution does not decay within the margin cap");
        const Rect padded = window.expanded(margin);
        const auto g = FiniteSandpile::window(spec, padded);
        std::vector<BigInt> local(g.size(), 0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Coord z = g.cells()[i];
            if (window.contains(z))
                local[i] = psi[static_cast<std::size_t>((z.y - window.y0) * window.width() + (z.x - window.x0))];
        }
        auto rep = poisson_solve(g, local, opt);
        if (g.exact()) return rep;
        bool decayed = true;
        for (std::size_t i = 0; i < g.size() && decayed; ++i) {
            const Coord z = g.cells()[i];
            const bool ring = z.x == padded.x0 || z.x == padded.x1 || z.y == padded.y0 || z.y == padded.y1;
            if (ring && abs(rep.numerators[i]) > 4) decayed = false;
        }
        if (decayed) return rep;
    }
}

}  // namespace sandpile
