#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mwp/equations/rational.hpp"

namespace mwp {

enum class NumberKind { kNegative, kUnitFraction, kOther };

const char* to_string(NumberKind k);
// 'M' for negative, 'F' for values strictly between 0 and 1, 'N' otherwise.
char symbol_letter(NumberKind k);
NumberKind kind_of(const Rational& value);

// Surface shape of a number as written in the text.
enum class NumberForm { kInteger, kDecimal, kFraction, kMixed, kPercent };

inline constexpr std::size_t kMaxNumberIndex = 12;

struct ExtractedNumber {
  std::size_t begin = 0;  // byte offsets into the text, [begin, end)
  std::size_t end = 0;
  std::string surface;
  Rational value;
  NumberKind kind = NumberKind::kOther;
  NumberForm form = NumberForm::kInteger;
  std::size_t index = 0;  // 1-based position among all numbers of the text
  // Mixed numbers: whole and fractional part. Percents: the written amount.
  std::vector<Rational> parts;

  std::string symbol() const;
};

// Integers (with optional thousands separators), decimals, signed numbers,
// percents ("5%" -> 1/20), simple fractions ("1/3") and mixed numbers
// ("3 1/3" -> 10/3); left to right, longest match, non-overlapping.
std::vector<ExtractedNumber> extract_numbers(std::string_view text);

// Alternative values the same surface form may take in a gold equation,
// without duplicates: the canonical value; for values with no finite decimal
// spelling, truncations and roundings to 1-4 places; the whole and fraction
// of a mixed number; the written amount of a percent.
std::vector<Rational> variants(const ExtractedNumber& n);

struct NumberMapping {
  std::vector<ExtractedNumber> numbers;

  // Value bound to a symbol such as "N_3"; nullopt when the index is out of
  // range or the kind letter does not match the number at that index.
  std::optional<Rational> lookup(std::string_view symbol) const;
};

struct ParsedSymbol {
  char letter;
  std::size_t index;
};
std::optional<ParsedSymbol> parse_symbol(std::string_view token);
std::string make_symbol(NumberKind kind, std::size_t index);

// Literals allowed to stay numeric in a template.
bool is_whitelisted_constant(const Rational& v);
const std::vector<int>& whitelisted_constants();

struct EquationTemplate {
  std::vector<std::string> tokens;

  std::string text() const;  // tokens joined by single spaces
  static EquationTemplate from_text(std::string_view text);
};

class UnalignableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownSymbolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AlignOptions {
  // Test hook: shuffles the candidate order of every literal with this seed.
  std::optional<std::uint64_t> shuffle_seed;
  std::size_t node_limit = 200000;
};

// Replaces every numeric literal of the gold equations with the symbol of a
// text number whose variants contain it. Exponent literals and, when no text
// number fits, whitelisted constants stay literal. Among assignments the
// search minimises constant/reuse fallbacks, then prefers earlier literals
// taking the lowest-index canonical match.
EquationTemplate align(const std::vector<ExtractedNumber>& numbers, std::string_view gold,
                       const AlignOptions& options = {});

// Concrete equation text with every symbol replaced by its value. Negative
// values are parenthesised after an operator or before '^'; non-integer
// non-terminating values are written as "(p/q)".
std::string substitute(const EquationTemplate& tmpl, const NumberMapping& mapping);

// Encoder input: lowercased word/punctuation tokens with every number span
// replaced by its symbol (percent spans are followed by a "%" token).
std::vector<std::string> source_tokens(std::string_view text,
                                       const std::vector<ExtractedNumber>& numbers);

}  // namespace mwp
