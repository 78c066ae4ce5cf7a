#pragma once
// Z_k-valued harmonic functions and the sandpile states they encode: the ray
// recurrence b_{n+1} = 4 b_n - b_{n-1}, torsion states on the ray, kernels
// of the Laplacian mod p, the cylinder transfer construction, the
// state <-> harmonic correspondence and the no-torsion interval prefix.

#include "sandpile/bigint.hpp"
#include "sandpile/carrier.hpp"
#include "sandpile/group.hpp"
#include "sandpile/linalg.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sandpile {

struct ModKSequence {
    std::int64_t modulus = 2;
    std::vector<std::int64_t> values;
};

/// b_0 = 0, b_1 = b1, b_{n+1} = 4 b_n - b_{n-1} mod k; `len` terms.
inline ModKSequence ray_mod_k(std::int64_t k, std::int64_t b1, std::int64_t len) {
    if (k < 2) throw std::invalid_argument("modulus must be >= 2");
    if (len < 2) throw std::invalid_argument("length must be >= 2");
    ModKSequence s{k, std::vector<std::int64_t>(static_cast<std::size_t>(len))};
    s.values[0] = 0;
    s.values[1] = mod_p(b1, k);
    for (std::size_t n = 2; n < s.values.size(); ++n)
        s.values[n] = mod_p(4 * s.values[n - 1] - s.values[n - 2], k);
    return s;
}

/// The same recurrence over Z with b_1 = 1: 0, 1, 4, 15, 56, ...
inline std::vector<BigInt> ray_coefficients(std::int64_t len) {
    std::vector<BigInt> b(static_cast<std::size_t>(std::max<std::int64_t>(len, 2)));
    b[0] = 0;
    b[1] = 1;
    for (std::size_t n = 2; n < b.size(); ++n) b[n] = 4 * b[n - 1] - b[n - 2];
    b.resize(static_cast<std::size_t>(len));
    return b;
}

struct RankAndPeriod {
    std::int64_t d = 0;   // least m >= 1 with b_m = 0
    std::int64_t pi = 0;  // least N >= 1 with (b_N, b_{N+1}) = (0, 1)
};

inline RankAndPeriod rank_and_period(std::int64_t k) {
    if (k < 2) throw std::invalid_argument("modulus must be >= 2");
    RankAndPeriod r;
    std::int64_t prev = 0, cur = 1;
    // The pair map is invertible on Z_k^2, so (0,1) recurs within k^2 steps.
    for (std::int64_t n = 1; n <= k * k + 1; ++n) {
        const std::int64_t next = mod_p(4 * cur - prev, k);
        prev = cur;
        cur = next;
        // now (prev, cur) = (b_n, b_{n+1})
        if (prev == 0 && r.d == 0) r.d = n;
        if (prev == 0 && cur == 1) {
            r.pi = n;
            return r;
        }
    }
    throw std::logic_error("pair period not found");
}

/// a_n = num_n / k in [0, 1) with num_n = c_num * b_n mod k.
struct RationalRaySequence {
    std::int64_t denominator = 2;
    std::vector<std::int64_t> numerators;

    [[nodiscard]] Rational at(std::size_t n) const { return Rational(numerators.at(n), denominator); }
};

inline RationalRaySequence rational_ray(std::int64_t k, std::int64_t c_num, std::int64_t len) {
    return {k, ray_mod_k(k, c_num, len).values};
}

struct RayTorsion {
    std::int64_t modulus = 2;
    std::int64_t c_num = 1;
    std::int64_t length = 0;          // truncation actually used
    FiniteSandpile carrier;
    RationalRaySequence a;            // a_0 .. a_{length+1}
    std::vector<std::int64_t> phi;    // phi(1) .. phi(length)
    Config gamma;                     // 3 beta + phi
    Config state;                     // recurrent element
};

/// Smallest L >= min_length with d(k) | L + 1. On TruncatedRay(L) the cell
/// L + 1 is a sink, and b_{L+1} = 0 makes the finite element exact.
inline std::int64_t ray_torsion_length(std::int64_t k, std::int64_t min_length) {
    const auto rp = rank_and_period(k);
    std::int64_t L = std::max<std::int64_t>(min_length, 1);
    while ((L + 1) % rp.d != 0) ++L;
    return L;
}

/// Element of order k on the truncated ray built from a_n = c_num b_n / k:
/// phi(n) = a_{n-1} + a_{n+1} - 4 a_n, gamma = 3 beta + phi, relaxed.
inline RayTorsion ray_state_from_torsion(std::int64_t k, std::int64_t c_num, std::int64_t min_length = 200) {
    if (k < 2) throw std::invalid_argument("modulus must be >= 2");
    if (c_num <= 0 || c_num >= k) throw std::invalid_argument("c_num must lie in [1, k)");
    RayTorsion out;
    out.modulus = k;
    out.c_num = c_num;
    out.length = ray_torsion_length(k, min_length);
    out.carrier = FiniteSandpile::finite(sinks::TruncatedRay{out.length});
    out.a = rational_ray(k, c_num, out.length + 2);
    const auto& num = out.a.numerators;
    const SandpileGroup G(out.carrier);
    out.gamma.resize(static_cast<std::size_t>(out.length));
    for (std::int64_t n = 1; n <= out.length; ++n) {
        const auto i = static_cast<std::size_t>(n);
        const std::int64_t scaled = num[i - 1] + num[i + 1] - 4 * num[i];
        if (scaled % k != 0) throw std::logic_error("ray sequence is not harmonic mod 1");
        const std::int64_t phi = scaled / k;
        if (phi < -3 || phi > 1) throw std::logic_error("phi outside [-3, 1]");
        out.phi.push_back(phi);
        const auto v = *out.carrier.index_of({n, 0});
        out.gamma[v] = 3 * G.beta()[v] + phi;
    }
    out.state = G.drive(G.relax(out.gamma));
    return out;
}

struct HarmonicModK {
    FiniteSandpile carrier;
    std::int64_t modulus = 2;
    std::vector<std::int64_t> values;  // in [0, modulus), carrier vertex order

    [[nodiscard]] bool is_zero() const {
        return std::all_of(values.begin(), values.end(), [](auto v) { return v == 0; });
    }
    /// Value at any plane cell: 0 on sinks, periodic lift on a torus.
    [[nodiscard]] std::int64_t at(Coord z) const {
        const auto i = carrier.index_of(z);
        return i ? values[*i] : 0;
    }
};

/// Reduced Laplacian 4I - A as int64 rows.
inline Matrix<std::int64_t> laplacian_rows(const FiniteSandpile& g) {
    const std::size_t n = g.size();
    Matrix<std::int64_t> L(n, std::vector<std::int64_t>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
        L[i][i] += 4;
        for (const auto j : g.topology().nbr[i])
            if (j >= 0) L[i][static_cast<std::size_t>(j)] -= 1;
    }
    return L;
}

/// Delta phi = 0 mod k at every vertex of the carrier.
inline bool is_harmonic_mod(const FiniteSandpile& g, const std::vector<std::int64_t>& phi, std::int64_t k) {
    g.check_size(phi.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::int64_t acc = -4 * phi[i];
        for (const auto j : g.topology().nbr[i])
            if (j >= 0) acc += phi[static_cast<std::size_t>(j)];
        if (mod_p(acc, k) != 0) return false;
    }
    return true;
}

/// Harmonicity of the plane lift on `window`, checked cell by cell with the
/// plane Laplacian of the carrier's sink spec.
inline bool lifts_harmonically(const HarmonicModK& h, const Rect& window) {
    const SinkSpec& spec = h.carrier.spec();
    auto f = [&](Coord z) { return h.at(z); };
    for (std::int64_t y = window.y0; y <= window.y1; ++y)
        for (std::int64_t x = window.x0; x <= window.x1; ++x) {
            const Coord z{x, y};
            if (is_sink(spec, z)) continue;
            if (mod_p(laplacian_at(spec, f, z), h.modulus) != 0) return false;
        }
    return true;
}

/// Basis of the Z_p-harmonic functions (zero on sinks) of the carrier.
inline std::vector<HarmonicModK> laplacian_kernel_mod_p(const FiniteSandpile& g, std::int64_t p) {
    if (p < 2 || !is_probable_prime(p)) throw std::invalid_argument("modulus must be prime");
    std::vector<HarmonicModK> out;
    for (auto& v : nullspace_mod_p(laplacian_rows(g), g.size(), p)) out.push_back({g, p, std::move(v)});
    return out;
}

inline std::size_t kernel_dimension_mod_p(const FiniteSandpile& g, std::int64_t p) {
    return g.size() - rank_mod_p(laplacian_rows(g), p);
}

/// Recurrent element g with k g = Delta phi, where phi is lifted to [0, k).
inline Config harmonic_to_state(const HarmonicModK& h) {
    const auto& g = h.carrier;
    if (!is_harmonic_mod(g, h.values, h.modulus)) throw std::invalid_argument("function is not harmonic mod k");
    std::vector<BigInt> state(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::int64_t acc = -4 * mod_p(h.values[i], h.modulus);
        for (const auto j : g.topology().nbr[i])
            if (j >= 0) acc += mod_p(h.values[static_cast<std::size_t>(j)], h.modulus);
        state[i] = acc / h.modulus;
    }
    return SandpileGroup(g).to_recurrent(state);
}

/// For g with k g = 0 in the group, k g = Delta f for an integer f; returns
/// f mod k. Throws when k is not a multiple of the order of g.
inline HarmonicModK state_to_harmonic(const FiniteSandpile& g, const Config& state, std::int64_t k) {
    g.check_size(state.size());
    const SandpileGroup G(g);
    std::vector<BigInt> rhs(g.size());
    // Delta f = k g  <=>  (4I - A) f = -k g
    for (std::size_t i = 0; i < g.size(); ++i) rhs[i] = -BigInt(k) * state[i];
    const auto f = solve_rational(G.reduced_laplacian(), rhs);
    HarmonicModK out{g, k, std::vector<std::int64_t>(g.size())};
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (denominator(f[i]) != 1) throw GroupError("element order does not divide k");
        const BigInt r = numerator(f[i]) % k;
        out.values[i] = mod_p(r.convert_to<std::int64_t>(), k);
    }
    return out;
}

/// Order of the class of an arbitrary integer vector w: the lcm of the
/// denominators of L^{-1} w.
inline BigInt class_order(const Matrix<Rational>& inverse_laplacian, const std::vector<BigInt>& w) {
    BigInt ord = 1;
    for (const auto& row : inverse_laplacian) {
        Rational s = 0;
        for (std::size_t j = 0; j < row.size(); ++j)
            if (w[j] != 0) s += row[j] * w[j];
        const BigInt d = denominator(s);
        ord = ord / boost::multiprecision::gcd(ord, d) * d;
    }
    return ord;
}

inline Matrix<Rational> inverse_rational(const Matrix<BigInt>& A) {
    const std::size_t n = A.size();
    Matrix<Rational> a(n, std::vector<Rational>(2 * n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a[i][j] = A[i][j];
        a[i][n + i] = 1;
    }
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        while (p < n && a[p][c] == 0) ++p;
        if (p == n) throw std::domain_error("singular matrix");
        std::swap(a[c], a[p]);
        const Rational inv = 1 / a[c][c];
        for (auto& v : a[c]) v *= inv;
        std::vector<std::size_t> nz;
        for (std::size_t j = c; j < 2 * n; ++j)
            if (a[c][j] != 0) nz.push_back(j);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c || a[r][c] == 0) continue;
            const Rational f = a[r][c];
            for (const auto j : nz) a[r][j] -= f * a[c][j];
        }
    }
    Matrix<Rational> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i].assign(a[i].begin() + static_cast<std::ptrdiff_t>(n), a[i].end());
    return out;
}

/// Torus quotient of the periodic sinks S_{m,n} with periods (P, Q), where
/// m | P and n | Q.
inline TorusSandpile periodic_quotient(std::int64_t m, std::int64_t n, std::int64_t P, std::int64_t Q) {
    if (P % m != 0 || Q % n != 0) throw std::invalid_argument("torus periods must be multiples of the sink periods");
    std::vector<Coord> s;
    for (std::int64_t i = 0; i < P; i += m)
        for (std::int64_t j = 0; j < Q; j += n) s.push_back({i, j});
    return TorusSandpile(P, Q, std::move(s));
}

struct TorsionWitness {
    std::int64_t order = 0;
    std::int64_t period_x = 0;  // P
    std::int64_t period_y = 0;  // Q
    FiniteSandpile carrier;
    Config element;        // recurrent, order exactly `order`
    HarmonicModK harmonic; // Z_order valued, nonzero
};

/// Searches tori P x Q (P = m, 2m, ... <= max_period) of S_{m,n} for an
/// element of order exactly N, assembling it from unit vectors by CRT over
/// the prime powers of N.
inline std::optional<TorsionWitness> periodic_torsion(std::int64_t m, std::int64_t n, std::int64_t N, std::int64_t Q,
                                                      std::int64_t max_period) {
    if (N < 2) throw std::invalid_argument("order must be >= 2");
    const auto factors = factorize(N);
    for (std::int64_t P = m; P <= max_period; P += m) {
        const TorusSandpile t = periodic_quotient(m, n, P, Q);
        const SandpileGroup G(t);
        const auto Linv = inverse_rational(G.reduced_laplacian());
        std::vector<BigInt> w(t.size(), 0);
        bool found = true;
        for (const auto& [q, a] : factors) {
            BigInt qa = 1;
            for (int i = 0; i < a; ++i) qa *= q;
            bool got = false;
            for (std::size_t z = 0; z < t.size() && !got; ++z) {
                std::vector<BigInt> unit(t.size(), 0);
                unit[z] = 1;
                const BigInt ord = class_order(Linv, unit);
                if (ord % qa != 0) continue;
                w[z] += ord / qa;
                got = true;
            }
            if (!got) {
                found = false;
                break;
            }
        }
        if (!found) continue;
        if (class_order(Linv, w) != N) throw std::logic_error("assembled element has the wrong order");
        TorsionWitness out;
        out.order = N;
        out.period_x = P;
        out.period_y = Q;
        out.carrier = t;
        out.element = G.to_recurrent(w);
        out.harmonic = state_to_harmonic(t, out.element, N);
        return out;
    }
    return std::nullopt;
}

struct CylinderHarmonic {
    std::int64_t depth = 0;         // blocks between a free value and the sink it controls, -1 if none
    std::int64_t preperiod = 0;     // k
    std::int64_t period_blocks = 0; // k' - k
    HarmonicModK harmonic;          // on the torus (period_blocks * m) x n
};

namespace detail {

// Linear block map of the cylinder walk. The state v holds columns
// x0 - 1 and x0 (rows 1..n-1) at a sink column x0 = j m; the free value
// x = phi(x0 + 1, 0). One block walks to column x0 + m.
struct CylinderBlock {
    std::int64_t m, n, p;

    [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(2 * n - 2); }

    // Returns the columns x0 - 1 .. x0 + m (m + 2 columns of n rows).
    [[nodiscard]] std::vector<std::vector<std::int64_t>> walk(const std::vector<std::int64_t>& v,
                                                             std::int64_t x) const {
        std::vector<std::vector<std::int64_t>> col(static_cast<std::size_t>(m + 2),
                                                   std::vector<std::int64_t>(static_cast<std::size_t>(n), 0));
        for (std::int64_t i = 1; i < n; ++i) {
            col[0][static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i - 1)];
            col[1][static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(n - 1 + i - 1)];
        }
        for (std::int64_t c = 1; c <= m; ++c) {
            const auto& prev = col[static_cast<std::size_t>(c - 1)];
            const auto& cur = col[static_cast<std::size_t>(c)];
            auto& next = col[static_cast<std::size_t>(c + 1)];
            for (std::int64_t y = 0; y < n; ++y) {
                if (c == 1 && y == 0) {
                    next[0] = mod_p(x, p);  // column x0 is a sink at row 0
                    continue;
                }
                const auto yi = static_cast<std::size_t>(y);
                const std::int64_t up = cur[static_cast<std::size_t>((y + 1) % n)];
                const std::int64_t down = cur[static_cast<std::size_t>((y + n - 1) % n)];
                next[yi] = mod_p(4 * cur[yi] - prev[yi] - up - down, p);
            }
        }
        return col;
    }

    [[nodiscard]] std::vector<std::int64_t> state_of(const std::vector<std::vector<std::int64_t>>& col) const {
        std::vector<std::int64_t> v(dim());
        for (std::int64_t i = 1; i < n; ++i) {
            v[static_cast<std::size_t>(i - 1)] = col[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)];
            v[static_cast<std::size_t>(n - 1 + i - 1)] =
                col[static_cast<std::size_t>(m + 1)][static_cast<std::size_t>(i)];
        }
        return v;
    }

    // (next state, phi at the next sink) for state v and free value x.
    [[nodiscard]] std::pair<std::vector<std::int64_t>, std::int64_t> step(const std::vector<std::int64_t>& v,
                                                                          std::int64_t x) const {
        const auto col = walk(v, x);
        return {state_of(col), col[static_cast<std::size_t>(m + 1)][0]};
    }
};

inline std::vector<std::int64_t> mat_vec(const Matrix<std::int64_t>& M, const std::vector<std::int64_t>& v,
                                         std::int64_t p) {
    std::vector<std::int64_t> out(M.size(), 0);
    for (std::size_t i = 0; i < M.size(); ++i) {
        std::int64_t acc = 0;
        for (std::size_t j = 0; j < v.size(); ++j) acc = mod_p(acc + M[i][j] * v[j], p);
        out[i] = acc;
    }
    return out;
}

}  // namespace detail

/// Periodic Z_p-harmonic function on the cylinder W_n with sinks at
/// (j m, 0), built by the column transfer walk. The free value after each
/// sink is tuned so that phi vanishes at the first later sink it reaches
/// (depth t blocks ahead); initial states are restricted so that the t
/// sinks before that vanish too. A repeated state closes the walk into a
/// torus. Returns nullopt when no nonzero cycle is found within `cap` steps.
inline std::optional<CylinderHarmonic> cylinder_transfer_harmonic(std::int64_t m, std::int64_t n, std::int64_t p,
                                                                  std::int64_t cap = 1'000'000) {
    if (m < 2 || n < 2) throw std::invalid_argument("cylinder needs m, n >= 2");
    if (!is_probable_prime(p)) throw std::invalid_argument("modulus must be prime");
    const detail::CylinderBlock blk{m, n, p};
    const std::size_t dim = blk.dim();
    // T: state part of the block map with x = 0; e: image of (0, x = 1);
    // A: sink value functional with x = 0; c0: sink value of (0, x = 1).
    Matrix<std::int64_t> T(dim, std::vector<std::int64_t>(dim, 0));
    std::vector<std::int64_t> A(dim, 0);
    for (std::size_t j = 0; j < dim; ++j) {
        std::vector<std::int64_t> u(dim, 0);
        u[j] = 1;
        const auto [next, s] = blk.step(u, 0);
        for (std::size_t i = 0; i < dim; ++i) T[i][j] = next[i];
        A[j] = s;
    }
    const auto [e, c0] = blk.step(std::vector<std::int64_t>(dim, 0), 1);

    auto row_times = [&](const std::vector<std::int64_t>& row, const Matrix<std::int64_t>& M) {
        std::vector<std::int64_t> out(dim, 0);
        for (std::size_t j = 0; j < dim; ++j)
            for (std::size_t i = 0; i < dim; ++i) out[j] = mod_p(out[j] + row[i] * M[i][j], p);
        return out;
    };
    auto dot = [&](const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
        std::int64_t acc = 0;
        for (std::size_t i = 0; i < a.size(); ++i) acc = mod_p(acc + a[i] * b[i], p);
        return acc;
    };

    // c_t = sink value t blocks after a unit free value; A T^s are the rows
    // constraining the initial state.
    // When c_t vanishes for t up to dim + 1 it vanishes for all t: free
    // values never reach a sink, so x = 1 is as good as any choice.
    std::vector<std::vector<std::int64_t>> AT{A};
    std::int64_t t = 0, ct = c0;
    bool free_x = false;
    while (ct == 0) {
        if (++t > static_cast<std::int64_t>(dim) + 1) {
            free_x = true;
            break;
        }
        ct = dot(AT.back(), e);
        AT.push_back(row_times(AT.back(), T));
    }
    // AT[s] = A T^s for s = 0..t
    const auto lead = free_x ? std::vector<std::int64_t>(dim, 0) : AT[static_cast<std::size_t>(t)];
    const std::int64_t inv_ct = free_x ? 0 : inverse_mod(ct, p);
    Matrix<std::int64_t> constraints(AT.begin(), AT.begin() + (free_x ? static_cast<std::ptrdiff_t>(AT.size()) : t));
    auto U = constraints.empty() ? Matrix<std::int64_t>{} : nullspace_mod_p(constraints, dim, p);
    if (constraints.empty())
        for (std::size_t j = 0; j < dim; ++j) {
            std::vector<std::int64_t> u(dim, 0);
            u[j] = 1;
            U.push_back(u);
        }

    std::mt19937_64 rng(static_cast<std::uint64_t>(p * 1000003 + m * 1009 + n));
    std::vector<std::vector<std::int64_t>> starts = U;
    if (free_x) starts.insert(starts.begin(), std::vector<std::int64_t>(dim, 0));
    for (int r = 0; r < 8 && !U.empty(); ++r) {
        std::vector<std::int64_t> u(dim, 0);
        for (const auto& b : U) {
            const auto c = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(p));
            for (std::size_t i = 0; i < dim; ++i) u[i] = mod_p(u[i] + c * b[i], p);
        }
        starts.push_back(u);
    }

    for (const auto& v0 : starts) {
        std::map<std::vector<std::int64_t>, std::int64_t> seen;
        std::vector<std::vector<std::int64_t>> states;
        std::vector<std::int64_t> xs;
        std::vector<std::int64_t> v = v0;
        std::int64_t k0 = -1;
        for (std::int64_t k = 0; k <= cap; ++k) {
            if (auto it = seen.find(v); it != seen.end()) {
                k0 = it->second;
                break;
            }
            seen.emplace(v, k);
            states.push_back(v);
            const std::int64_t x = free_x ? 1 : mod_p(-dot(lead, v) * inv_ct, p);
            xs.push_back(x);
            v = blk.step(v, x).first;
        }
        if (k0 < 0) continue;
        const std::int64_t K = static_cast<std::int64_t>(states.size()) - k0;
        const std::int64_t P = K * m;
        const TorusSandpile torus = periodic_quotient(m, n, P, n);
        HarmonicModK h{torus, p, std::vector<std::int64_t>(torus.size(), 0)};
        for (std::int64_t b = 0; b < K; ++b) {
            const auto col = blk.walk(states[static_cast<std::size_t>(k0 + b)], xs[static_cast<std::size_t>(k0 + b)]);
            for (std::int64_t c = 0; c < m; ++c)
                for (std::int64_t y = 0; y < n; ++y) {
                    const Coord z{b * m + c, y};
                    if (const auto i = torus.index_of(z))
                        h.values[*i] = col[static_cast<std::size_t>(c + 1)][static_cast<std::size_t>(y)];
                }
        }
        if (h.is_zero()) continue;
        if (!is_harmonic_mod(torus, h.values, p)) throw std::logic_error("cylinder walk produced a non-harmonic function");
        return CylinderHarmonic{free_x ? -1 : t, k0, K, std::move(h)};
    }
    return std::nullopt;
}

struct NoTorsionStep {
    std::int64_t prime = 2;
    std::int64_t column = 0;  // k_j
    std::int64_t height = 0;  // K_j
    int sign = 0;             // +1 / -1 for the choice at this step, 0 for j = 1
    std::vector<std::size_t> kernel_dims;  // mod p_1..p_j on the prefix up to k_j
};

struct NoTorsionPrefix {
    sinks::LineWithIntervals spec;
    std::vector<NoTorsionStep> steps;
    bool ok = true;
    std::string failure;
};

inline std::vector<std::int64_t> first_primes(std::size_t count) {
    std::vector<std::int64_t> ps;
    for (std::int64_t c = 2; ps.size() < count; ++c)
        if (is_probable_prime(c)) ps.push_back(c);
    return ps;
}

/// Ray with attached intervals R(k_j, K_j): k_1 = 3, K_1 = 2,
/// K_{j+1} = K_j d(p_{j+1}), k_{j+1} = k_j + K_{j+1} +- 1. The sign is the
/// one (preferring '+') for which the prefix x <= k_{j+1} has no nonzero
/// harmonic function mod any of p_1..p_{j+1}.
inline NoTorsionPrefix no_torsion_prefix(std::int64_t J, std::int64_t max_j = 6) {
    if (J < 1) throw std::invalid_argument("J must be >= 1");
    if (J > max_j) throw std::invalid_argument("J exceeds the configured bound " + std::to_string(max_j));
    const auto primes = first_primes(static_cast<std::size_t>(J));
    NoTorsionPrefix out;
    auto dims_for = [&](const sinks::LineWithIntervals& s, std::size_t upto) {
        const auto g = FiniteSandpile::finite(s);
        std::vector<std::size_t> dims;
        for (std::size_t i = 0; i < upto; ++i) dims.push_back(kernel_dimension_mod_p(g, primes[i]));
        return dims;
    };
    auto trivial = [](const std::vector<std::size_t>& d) {
        return std::all_of(d.begin(), d.end(), [](auto x) { return x == 0; });
    };

    sinks::LineWithIntervals s{{{3, 2}}, 3};
    std::int64_t k = 3, K = 2;
    out.steps.push_back({primes[0], k, K, 0, dims_for(s, 1)});
    if (!trivial(out.steps.back().kernel_dims)) {
        out.ok = false;
        out.failure = "prefix for j = 1 has a nonzero harmonic function mod 2";
    }
    for (std::int64_t j = 1; j < J && out.ok; ++j) {
        const std::int64_t p = primes[static_cast<std::size_t>(j)];
        const std::int64_t Kn = K * rank_and_period(p).d;
        bool chosen = false;
        for (const int sign : {+1, -1}) {
            const std::int64_t kn = k + Kn + sign;
            auto cand = s;
            cand.intervals.push_back({kn, Kn});
            cand.x_limit = kn;
            auto dims = dims_for(cand, static_cast<std::size_t>(j + 1));
            if (!trivial(dims)) continue;
            s = cand;
            k = kn;
            K = Kn;
            out.steps.push_back({p, k, K, sign, std::move(dims)});
            chosen = true;
            break;
        }
        if (!chosen) {
            out.ok = false;
            out.failure = "neither sign gives a trivial kernel at j = " + std::to_string(j + 1);
        }
    }
    out.spec = s;
    return out;
}

}  // namespace sandpile
