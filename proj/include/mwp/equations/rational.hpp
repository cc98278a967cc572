#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace mwp {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Parses "12", "-3", "2.5", ".25", "10/3", "-7/2". Returns nullopt on any
// other input.
std::optional<Rational> parse_rational(std::string_view text);

// "p/q" in lowest terms, or "p" for integers.
std::string to_string(const Rational& r);

// Exact decimal spelling if the denominator has only factors 2 and 5
// ("0.25", "-1.5", "7"); nullopt otherwise.
std::optional<std::string> to_decimal_string(const Rational& r);

double to_double(const Rational& r);

// Rounds/truncates |r| to `places` decimal digits, keeping the sign. Rounding
// is half away from zero.
Rational round_decimal(const Rational& r, int places);
Rational truncate_decimal(const Rational& r, int places);

// Exact square root when r is the square of a rational.
std::optional<Rational> exact_sqrt(const Rational& r);

}  // namespace mwp
