#pragma once
// Exact linear algebra: fraction-free determinants, rational solves,
// elimination over Z_p, and integer factorisation.

#include "sandpile/bigint.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/miller_rabin.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sandpile {

using Rational = boost::multiprecision::cpp_rational;

template <class T>
using Matrix = std::vector<std::vector<T>>;

/// Bareiss elimination; every intermediate value is an exact minor.
inline BigInt bareiss_determinant(Matrix<BigInt> a) {
    const std::size_t n = a.size();
    if (n == 0) return 1;
    BigInt prev = 1;
    int sign = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (a[k][k] == 0) {
            std::size_t r = k + 1;
            while (r < n && a[r][k] == 0) ++r;
            if (r == n) return 0;
            std::swap(a[k], a[r]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            for (std::size_t j = k + 1; j < n; ++j) a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            a[i][k] = 0;
        }
        prev = a[k][k];
    }
    return sign * a[n - 1][n - 1];
}

/// Solves A x = b over Q. Throws when A is singular.
inline std::vector<Rational> solve_rational(const Matrix<BigInt>& A, const std::vector<BigInt>& b) {
    const std::size_t n = A.size();
    Matrix<Rational> a(n, std::vector<Rational>(n + 1));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a[i][j] = A[i][j];
        a[i][n] = b[i];
    }
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        while (p < n && a[p][c] == 0) ++p;
        if (p == n) throw std::domain_error("singular system");
        std::swap(a[c], a[p]);
        std::vector<std::size_t> nz;
        for (std::size_t j = c; j <= n; ++j)
            if (a[c][j] != 0) nz.push_back(j);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c || a[r][c] == 0) continue;
            const Rational f = a[r][c] / a[c][c];
            for (const auto j : nz) a[r][j] -= f * a[c][j];
        }
    }
    std::vector<Rational> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = a[i][n] / a[i][i];
    return x;
}

inline std::int64_t mod_p(std::int64_t a, std::int64_t p) {
    const std::int64_t r = a % p;
    return r < 0 ? r + p : r;
}

inline std::int64_t inverse_mod(std::int64_t a, std::int64_t p) {
    std::int64_t t = 0, nt = 1, r = p, nr = mod_p(a, p);
    while (nr != 0) {
        const std::int64_t q = r / nr;
        std::tie(t, nt) = std::make_pair(nt, t - q * nt);
        std::tie(r, nr) = std::make_pair(nr, r - q * nr);
    }
    if (r != 1) throw std::domain_error("not invertible modulo p");
    return mod_p(t, p);
}

/// Reduced row echelon form over Z_p in place; returns the pivot columns.
inline std::vector<std::size_t> rref_mod_p(Matrix<std::int64_t>& a, std::int64_t p) {
    std::vector<std::size_t> pivots;
    if (a.empty()) return pivots;
    const std::size_t rows = a.size(), cols = a[0].size();
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t s = r;
        while (s < rows && mod_p(a[s][c], p) == 0) ++s;
        if (s == rows) continue;
        std::swap(a[r], a[s]);
        const std::int64_t inv = inverse_mod(a[r][c], p);
        for (auto& v : a[r]) v = mod_p(v * inv, p);
        std::vector<std::size_t> nz;
        for (std::size_t j = c; j < cols; ++j)
            if (a[r][j] != 0) nz.push_back(j);
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r) continue;
            const std::int64_t f = mod_p(a[i][c], p);
            if (f == 0) continue;
            for (const auto j : nz) a[i][j] = mod_p(a[i][j] - f * a[r][j], p);
        }
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

/// Basis of {x : A x = 0 mod p}, each vector with entries in [0, p).
inline Matrix<std::int64_t> nullspace_mod_p(Matrix<std::int64_t> a, std::size_t cols, std::int64_t p) {
    for (auto& row : a)
        for (auto& v : row) v = mod_p(v, p);
    const auto pivots = rref_mod_p(a, p);
    std::vector<int> is_pivot(cols, -1);
    for (std::size_t r = 0; r < pivots.size(); ++r) is_pivot[pivots[r]] = static_cast<int>(r);
    Matrix<std::int64_t> basis;
    for (std::size_t f = 0; f < cols; ++f) {
        if (is_pivot[f] >= 0) continue;
        std::vector<std::int64_t> v(cols, 0);
        v[f] = 1;
        for (std::size_t r = 0; r < pivots.size(); ++r) v[pivots[r]] = mod_p(-a[r][f], p);
        basis.push_back(std::move(v));
    }
    return basis;
}

inline std::size_t rank_mod_p(Matrix<std::int64_t> a, std::int64_t p) {
    for (auto& row : a)
        for (auto& v : row) v = mod_p(v, p);
    return rref_mod_p(a, p).size();
}

/// True when v lies in the Z_p-span of the basis vectors.
inline bool in_span_mod_p(const Matrix<std::int64_t>& basis, const std::vector<std::int64_t>& v, std::int64_t p) {
    Matrix<std::int64_t> m = basis;
    const std::size_t r0 = rank_mod_p(m, p);
    m.push_back(v);
    return rank_mod_p(std::move(m), p) == r0;
}

inline bool is_probable_prime(const BigInt& n) {
    if (n < 2) return false;
    static std::mt19937_64 rng(0x5eed);
    return boost::multiprecision::miller_rabin_test(n, 30, rng);
}

namespace detail {

// Throws after `budget` iterations in total.
inline BigInt pollard_rho(const BigInt& n, std::int64_t budget = 2'000'000) {
    if (n % 2 == 0) return 2;
    for (BigInt c = 1;; ++c) {
        BigInt x = 2, y = 2, d = 1;
        auto f = [&](const BigInt& v) { return (v * v + c) % n; };
        while (d == 1) {
            if (--budget < 0)
                throw Error("factorization gave up on a " + std::to_string(n.str().size()) + "-digit composite");
            x = f(x);
            y = f(f(y));
            d = boost::multiprecision::gcd(x > y ? BigInt(x - y) : BigInt(y - x), n);
        }
        if (d != n) return d;
    }
}

inline void factor_into(const BigInt& n, std::map<BigInt, int>& out) {
    if (n == 1) return;
    if (is_probable_prime(n)) {
        ++out[n];
        return;
    }
    const BigInt d = pollard_rho(n);
    factor_into(d, out);
    factor_into(n / d, out);
}

}  // namespace detail

/// Prime factorisation of n >= 1 as (prime, exponent) pairs in increasing order.
inline std::vector<std::pair<BigInt, int>> factorize(BigInt n) {
    if (n < 1) throw std::invalid_argument("factorize: n must be positive");
    std::map<BigInt, int> f;
    for (std::int64_t p = 2; p < 10000 && BigInt(p) * p <= n; ++p)
        while (n % p == 0) {
            ++f[p];
            n /= p;
        }
    detail::factor_into(n, f);
    return {f.begin(), f.end()};
}

}  // namespace sandpile
