#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cctype>
#include <cmath>
#include <string>

#include "ot/error.hpp"

namespace ot {

/// All masses in this library are exact rationals; only costs and distances
/// live in floating point. GMP keeps the arithmetic canonical (reduced form,
/// positive denominator), so two equal rationals always compare equal.
using Rational = boost::multiprecision::mpq_rational;
using BigInt = boost::multiprecision::mpz_int;

/// Exact conversion: every finite double is a dyadic rational.
inline Rational rational_from_double(double x) {
    if (!std::isfinite(x)) {
        throw err::invalid_argument("cannot convert non-finite float to rational");
    }
    return Rational(x);
}

inline double to_double(const Rational& r) { return r.template convert_to<double>(); }

/// Canonical text form: "p/q" in lowest terms, "p" when the denominator is 1.
inline std::string to_string(const Rational& r) { return r.str(); }

namespace detail {

inline bool is_integer_token(const std::string& s) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '-') ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    return true;
}

} // namespace detail

/// Parses "p/q" or "p" with optional leading sign on the numerator.
/// The result is canonicalized by GMP, so parse_rational("2/6") == Rational(1)/3.
inline Rational parse_rational(const std::string& text) {
    const auto slash = text.find('/');
    if (slash == std::string::npos) {
        if (!detail::is_integer_token(text)) {
            throw err::invalid_argument("malformed rational '" + text + "'");
        }
        return Rational(BigInt(text));
    }
    const std::string num = text.substr(0, slash);
    const std::string den = text.substr(slash + 1);
    if (!detail::is_integer_token(num) || !detail::is_integer_token(den) || den[0] == '-') {
        throw err::invalid_argument("malformed rational '" + text + "'");
    }
    BigInt d(den);
    if (d == 0) {
        throw err::invalid_argument("zero denominator in rational '" + text + "'");
    }
    return Rational(BigInt(num), d);
}

} // namespace ot
