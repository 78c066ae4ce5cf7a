#pragma once
// Integer plumbing shared by every module: the arbitrary-precision type, the
// 128-bit fast-path type, overflow-checked arithmetic and decimal I/O.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sandpile {

using BigInt = boost::multiprecision::cpp_int;
using Int128 = __int128;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A fast-path integer type overflowed; callers retry with a wider type.
class OverflowError : public Error {
public:
    OverflowError() : Error("integer overflow in fixed-width fast path") {}
};

namespace detail {

inline void checked_add(std::int64_t& a, std::int64_t b) {
    if (__builtin_add_overflow(a, b, &a)) throw OverflowError();
}
inline void checked_add(Int128& a, Int128 b) {
    if (__builtin_add_overflow(a, b, &a)) throw OverflowError();
}
inline void checked_add(BigInt& a, const BigInt& b) { a += b; }

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw OverflowError();
    return r;
}

}  // namespace detail

inline BigInt to_bigint(Int128 v) {
    const bool neg = v < 0;
    // -v overflows only for the minimum, which never occurs in this library.
    unsigned __int128 u = neg ? static_cast<unsigned __int128>(-v) : static_cast<unsigned __int128>(v);
    BigInt r = static_cast<std::uint64_t>(u >> 64);
    r <<= 64;
    r += static_cast<std::uint64_t>(u);
    return neg ? BigInt(-r) : r;
}
inline BigInt to_bigint(std::int64_t v) { return BigInt(v); }
inline BigInt to_bigint(const BigInt& v) { return v; }

/// Narrowing conversion; throws OverflowError when the value does not fit.
template <class T>
T narrow(const BigInt& v);

template <>
inline std::int64_t narrow<std::int64_t>(const BigInt& v) {
    if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
        throw OverflowError();
    return v.convert_to<std::int64_t>();
}

template <>
inline Int128 narrow<Int128>(const BigInt& v) {
    static const BigInt limit = BigInt(1) << 126;
    if (v >= limit || v <= -limit) throw OverflowError();
    const bool neg = v < 0;
    const BigInt a = neg ? BigInt(-v) : v;
    const auto hi = static_cast<std::uint64_t>(a >> 64);
    const auto lo = static_cast<std::uint64_t>(a & std::numeric_limits<std::uint64_t>::max());
    const Int128 r = static_cast<Int128>((static_cast<unsigned __int128>(hi) << 64) | lo);
    return neg ? -r : r;
}

template <>
inline BigInt narrow<BigInt>(const BigInt& v) {
    return v;
}

/// Parses an optionally signed decimal integer. Rejects anything else,
/// including empty strings, whitespace and leading '+'.
inline BigInt parse_bigint(std::string_view text) {
    std::size_t i = 0;
    if (!text.empty() && text[0] == '-') i = 1;
    if (i == text.size()) throw std::invalid_argument("empty integer literal");
    for (std::size_t j = i; j < text.size(); ++j)
        if (text[j] < '0' || text[j] > '9')
            throw std::invalid_argument("malformed integer literal '" + std::string(text) + "'");
    // cpp_int reads a leading 0 as an octal prefix.
    if (text.size() - i > 1 && text[i] == '0')
        throw std::invalid_argument("leading zero in integer literal '" + std::string(text) + "'");
    return BigInt(std::string(text));
}

inline std::string to_decimal(const BigInt& v) { return v.str(); }

}  // namespace sandpile
