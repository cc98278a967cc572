#include "mwp/equations/rational.hpp"

#include <cctype>

namespace mwp {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

// Boost reads a leading zero as an octal prefix, so strip them first.
Integer decimal_integer(std::string_view digits) {
  const auto first = digits.find_first_not_of('0');
  if (first == std::string_view::npos) return Integer(0);
  return Integer(std::string(digits.substr(first)));
}

Integer pow10(int n) {
  Integer p = 1;
  for (int i = 0; i < n; ++i) p *= 10;
  return p;
}

std::optional<Rational> parse_unsigned_decimal(std::string_view s) {
  const auto dot = s.find('.');
  if (dot == std::string_view::npos) {
    if (!all_digits(s)) return std::nullopt;
    return Rational(decimal_integer(s));
  }
  std::string_view whole = s.substr(0, dot);
  std::string_view frac = s.substr(dot + 1);
  if ((!whole.empty() && !all_digits(whole)) || !all_digits(frac)) return std::nullopt;
  const Integer num = decimal_integer(std::string(whole) + std::string(frac));
  return Rational(num, pow10(static_cast<int>(frac.size())));
}

std::optional<Integer> exact_isqrt(const Integer& n) {
  if (n < 0) return std::nullopt;
  Integer root = boost::multiprecision::sqrt(n);
  if (root * root != n) return std::nullopt;
  return root;
}

}  // namespace

std::optional<Rational> parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  if (text.empty()) return std::nullopt;
  std::optional<Rational> value;
  const auto slash = text.find('/');
  if (slash != std::string_view::npos) {
    auto num = parse_unsigned_decimal(text.substr(0, slash));
    auto den = parse_unsigned_decimal(text.substr(slash + 1));
    if (!num || !den || *den == 0) return std::nullopt;
    value = *num / *den;
  } else {
    value = parse_unsigned_decimal(text);
  }
  if (value && negative) *value = -*value;
  return value;
}

std::string to_string(const Rational& r) {
  const Integer num = boost::multiprecision::numerator(r);
  const Integer den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

std::optional<std::string> to_decimal_string(const Rational& r) {
  Integer num = boost::multiprecision::numerator(r);
  Integer den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  Integer d = den;
  int twos = 0;
  int fives = 0;
  while (d % 2 == 0) {
    d /= 2;
    ++twos;
  }
  while (d % 5 == 0) {
    d /= 5;
    ++fives;
  }
  if (d != 1) return std::nullopt;
  const int places = std::max(twos, fives);
  const bool negative = num < 0;
  if (negative) num = -num;
  const Integer scaled = num * pow10(places) / den;
  std::string digits = scaled.str();
  if (static_cast<int>(digits.size()) <= places) {
    digits.insert(0, static_cast<std::size_t>(places + 1) - digits.size(), '0');
  }
  digits.insert(digits.size() - static_cast<std::size_t>(places), ".");
  return (negative ? "-" : "") + digits;
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

Rational truncate_decimal(const Rational& r, int places) {
  const Integer scale = pow10(places);
  const Rational scaled = r * scale;
  // cpp_int division truncates toward zero.
  const Integer q = boost::multiprecision::numerator(scaled) / boost::multiprecision::denominator(scaled);
  return Rational(q, scale);
}

Rational round_decimal(const Rational& r, int places) {
  const Integer scale = pow10(places);
  Rational scaled = r * scale;
  const bool negative = scaled < 0;
  if (negative) scaled = -scaled;
  scaled += Rational(1, 2);
  Integer q = boost::multiprecision::numerator(scaled) / boost::multiprecision::denominator(scaled);
  if (negative) q = -q;
  return Rational(q, scale);
}

std::optional<Rational> exact_sqrt(const Rational& r) {
  if (r < 0) return std::nullopt;
  auto num = exact_isqrt(boost::multiprecision::numerator(r));
  auto den = exact_isqrt(boost::multiprecision::denominator(r));
  if (!num || !den) return std::nullopt;
  return Rational(*num, *den);
}

}  // namespace mwp
