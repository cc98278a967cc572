#include "mwp/numbering/numbering.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <limits>
#include <random>

#include "mwp/equations/ast.hpp"

namespace mwp {

const char* to_string(NumberKind k) {
  switch (k) {
    case NumberKind::kNegative:
      return "NEGATIVE";
    case NumberKind::kUnitFraction:
      return "UNIT_FRACTION";
    case NumberKind::kOther:
      return "OTHER";
  }
  return "?";
}

char symbol_letter(NumberKind k) {
  switch (k) {
    case NumberKind::kNegative:
      return 'M';
    case NumberKind::kUnitFraction:
      return 'F';
    case NumberKind::kOther:
      return 'N';
  }
  return 'N';
}

NumberKind kind_of(const Rational& value) {
  if (value < 0) return NumberKind::kNegative;
  if (value > 0 && value < 1) return NumberKind::kUnitFraction;
  return NumberKind::kOther;
}

std::string make_symbol(NumberKind kind, std::size_t index) {
  return std::string(1, symbol_letter(kind)) + "_" + std::to_string(index);
}

std::string ExtractedNumber::symbol() const { return make_symbol(kind, index); }

// ---------------------------------------------------------------------------
// Extraction

namespace {

bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

std::size_t scan_digits(std::string_view s, std::size_t i) {
  while (i < s.size() && digit(s[i])) ++i;
  return i;
}

// Integer part with optional ",ddd" groups. Returns end offset (== i on failure).
std::size_t scan_integer(std::string_view s, std::size_t i, std::string& cleaned) {
  const std::size_t end = scan_digits(s, i);
  if (end == i) return i;
  cleaned.assign(s.substr(i, end - i));
  std::size_t pos = end;
  if (end - i <= 3) {
    while (pos + 3 < s.size() && s[pos] == ',' && digit(s[pos + 1]) && digit(s[pos + 2]) &&
           digit(s[pos + 3]) && (pos + 4 >= s.size() || !digit(s[pos + 4]))) {
      cleaned.append(s.substr(pos + 1, 3));
      pos += 4;
    }
  }
  return pos;
}

struct Match {
  std::size_t end = 0;
  Rational value;
  NumberForm form = NumberForm::kInteger;
  std::vector<Rational> parts;
};

// Unsigned number starting at i; nullopt when none starts there.
std::optional<Match> match_unsigned(std::string_view s, std::size_t i) {
  std::string int_part;
  std::size_t pos = scan_integer(s, i, int_part);
  Match m;
  bool plain_integer = pos != i;
  bool thousands = plain_integer && int_part.size() != pos - i;
  if (pos < s.size() && s[pos] == '.' && pos + 1 < s.size() && digit(s[pos + 1])) {
    const std::size_t frac_end = scan_digits(s, pos + 1);
    std::string text = (int_part.empty() ? "0" : int_part) + "." +
                       std::string(s.substr(pos + 1, frac_end - pos - 1));
    m.value = *parse_rational(text);
    m.form = NumberForm::kDecimal;
    pos = frac_end;
    plain_integer = false;
  } else if (pos == i) {
    return std::nullopt;
  } else {
    m.value = *parse_rational(int_part);
    m.form = NumberForm::kInteger;
  }

  if (pos < s.size() && s[pos] == '%') {
    m.parts = {m.value};
    m.value /= 100;
    m.form = NumberForm::kPercent;
    m.end = pos + 1;
    return m;
  }
  if (plain_integer && !thousands) {
    // Simple fraction "p/q".
    if (pos + 1 < s.size() && s[pos] == '/' && digit(s[pos + 1])) {
      const std::size_t den_end = scan_digits(s, pos + 1);
      const auto den = parse_rational(s.substr(pos + 1, den_end - pos - 1));
      if (*den != 0 && (den_end >= s.size() || !word_char(s[den_end]))) {
        m.value /= *den;
        m.form = NumberForm::kFraction;
        m.end = den_end;
        return m;
      }
    }
    // Mixed number "w p/q" with p < q.
    if (pos + 1 < s.size() && s[pos] == ' ' && digit(s[pos + 1])) {
      const std::size_t num_end = scan_digits(s, pos + 1);
      if (num_end + 1 < s.size() && s[num_end] == '/' && digit(s[num_end + 1])) {
        const std::size_t den_end = scan_digits(s, num_end + 1);
        const auto num = parse_rational(s.substr(pos + 1, num_end - pos - 1));
        const auto den = parse_rational(s.substr(num_end + 1, den_end - num_end - 1));
        if (*den != 0 && *num < *den && (den_end >= s.size() || !word_char(s[den_end]))) {
          const Rational frac = *num / *den;
          m.parts = {m.value, frac};
          m.value += frac;
          m.form = NumberForm::kMixed;
          m.end = den_end;
          return m;
        }
      }
    }
  }
  m.end = pos;
  return m;
}

}  // namespace

std::vector<ExtractedNumber> extract_numbers(std::string_view text) {
  std::vector<ExtractedNumber> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    const bool boundary =
        i == 0 || !(word_char(text[i - 1]) || text[i - 1] == '.' || text[i - 1] == '/');
    bool negative = false;
    std::size_t start = i;
    if (c == '-' && boundary && i + 1 < text.size() &&
        (digit(text[i + 1]) || (text[i + 1] == '.' && i + 2 < text.size() && digit(text[i + 2])))) {
      negative = true;
      start = i + 1;
    } else if (!(boundary && (digit(c) || (c == '.' && i + 1 < text.size() && digit(text[i + 1]))))) {
      ++i;
      continue;
    }
    auto m = match_unsigned(text, start);
    if (!m) {
      ++i;
      continue;
    }
    ExtractedNumber n;
    n.begin = i;
    n.end = m->end;
    n.surface = std::string(text.substr(n.begin, n.end - n.begin));
    n.value = negative ? -m->value : m->value;
    n.form = m->form;
    n.parts = m->parts;
    if (negative) {
      for (auto& p : n.parts) p = -p;
    }
    n.kind = kind_of(n.value);
    n.index = out.size() + 1;
    out.push_back(std::move(n));
    i = m->end;
  }
  return out;
}

std::vector<Rational> variants(const ExtractedNumber& n) {
  std::vector<Rational> out;
  auto push = [&](const Rational& r) {
    if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
  };
  push(n.value);
  // Only values without a finite decimal spelling get written approximately.
  for (int places = 1; places <= 4 && !to_decimal_string(n.value); ++places) {
    push(truncate_decimal(n.value, places));
    push(round_decimal(n.value, places));
  }
  if (n.form == NumberForm::kMixed || n.form == NumberForm::kPercent) {
    for (const auto& p : n.parts) push(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Symbols and mapping

std::optional<ParsedSymbol> parse_symbol(std::string_view token) {
  if (token.size() < 3 || token[1] != '_') return std::nullopt;
  const char letter = token[0];
  if (letter != 'M' && letter != 'F' && letter != 'N') return std::nullopt;
  std::size_t index = 0;
  for (std::size_t i = 2; i < token.size(); ++i) {
    if (!digit(token[i])) return std::nullopt;
    index = index * 10 + static_cast<std::size_t>(token[i] - '0');
    if (index > 1000000) return std::nullopt;
  }
  if (index == 0) return std::nullopt;
  return ParsedSymbol{letter, index};
}

std::optional<Rational> NumberMapping::lookup(std::string_view symbol) const {
  auto parsed = parse_symbol(symbol);
  if (!parsed || parsed->index > numbers.size()) return std::nullopt;
  const ExtractedNumber& n = numbers[parsed->index - 1];
  if (symbol_letter(n.kind) != parsed->letter) return std::nullopt;
  return n.value;
}

const std::vector<int>& whitelisted_constants() {
  static const std::vector<int> values = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 100};
  return values;
}

bool is_whitelisted_constant(const Rational& v) {
  if (boost::multiprecision::denominator(v) != 1) return false;
  const auto& w = whitelisted_constants();
  return std::any_of(w.begin(), w.end(), [&](int c) { return v == c; });
}

std::string EquationTemplate::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

EquationTemplate EquationTemplate::from_text(std::string_view text) {
  EquationTemplate t;
  for (const EqToken& tok : tokenize_equation(text)) t.tokens.push_back(tok.text);
  return t;
}

// ---------------------------------------------------------------------------
// Alignment

namespace {

struct Slot {
  std::size_t token;                      // index of the literal token
  std::optional<std::size_t> sign_token;  // unary '-' directly before the literal
  Rational value;
  // Literal "p / q" where q is the next slot: p/q may be matched as one number.
  std::optional<Rational> fraction;
};

struct Candidate {
  enum class Type { kText, kConstant, kReuse };
  Type type;
  std::size_t number = 0;  // position in the numbers list
  int cost = 0;
  bool signed_match = false;    // consumes the unary minus
  bool fraction_match = false;  // consumes the following "/ q"
};

bool is_unary_context(const std::vector<EqToken>& toks, std::size_t minus) {
  if (minus == 0) return true;
  const auto k = toks[minus - 1].kind;
  return k == EqToken::Kind::kLParen || k == EqToken::Kind::kEquals ||
         k == EqToken::Kind::kSemicolon;
}

bool is_op(const std::vector<EqToken>& toks, std::size_t i, const char* op) {
  return i < toks.size() && toks[i].kind == EqToken::Kind::kOperator && toks[i].text == op;
}

bool has_variant(const std::vector<std::vector<Rational>>& vars, std::size_t n, const Rational& v) {
  const auto& vs = vars[n];
  return std::find(vs.begin(), vs.end(), v) != vs.end();
}

}  // namespace

EquationTemplate align(const std::vector<ExtractedNumber>& numbers, std::string_view gold,
                       const AlignOptions& options) {
  const std::vector<EqToken> toks = tokenize_equation(gold);
  parse_equations(toks);  // precondition: the gold equations are well formed

  std::vector<bool> exponent(toks.size(), false);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (!is_op(toks, i, "^")) continue;
    for (std::size_t j = i + 1; j < toks.size() && j <= i + 3; ++j) {
      if (toks[j].kind == EqToken::Kind::kNumber) {
        exponent[j] = true;
        break;
      }
    }
  }
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].kind == EqToken::Kind::kSymbol) {
      throw UnalignableError("gold equations already contain symbol '" + toks[i].text + "'");
    }
    if (toks[i].kind != EqToken::Kind::kNumber || exponent[i]) continue;
    Slot s{i, std::nullopt, *parse_rational(toks[i].text), std::nullopt};
    if (i > 0 && is_op(toks, i - 1, "-") && is_unary_context(toks, i - 1)) s.sign_token = i - 1;
    // Fold "p / q" unless neighbouring operators bind tighter or chain divisions.
    const bool den_literal = i + 2 < toks.size() && is_op(toks, i + 1, "/") &&
                             toks[i + 2].kind == EqToken::Kind::kNumber && !exponent[i + 2];
    if (den_literal && !(i > 0 && (is_op(toks, i - 1, "/") || is_op(toks, i - 1, "^"))) &&
        !is_op(toks, i + 3, "^") && !is_op(toks, i + 3, "/")) {
      const Rational den = *parse_rational(toks[i + 2].text);
      if (den != 0) s.fraction = s.value / den;
    }
    slots.push_back(std::move(s));
  }

  std::vector<std::vector<Rational>> vars;
  for (const auto& n : numbers) vars.push_back(variants(n));

  // Candidate lists in preference order; `used` filtering happens in the search.
  std::vector<std::vector<Candidate>> cands(slots.size());
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const Slot& slot = slots[s];
    auto& list = cands[s];
    auto add_text = [&](const Rational& v, bool sign, bool frac) {
      for (std::size_t n = 0; n < numbers.size(); ++n) {
        if (numbers[n].value == v) list.push_back({Candidate::Type::kText, n, 0, sign, frac});
      }
      for (std::size_t n = 0; n < numbers.size(); ++n) {
        if (numbers[n].value != v && has_variant(vars, n, v)) {
          list.push_back({Candidate::Type::kText, n, 0, sign, frac});
        }
      }
    };
    if (slot.fraction) {
      if (slot.sign_token) add_text(-*slot.fraction, true, true);
      add_text(*slot.fraction, false, true);
    }
    if (slot.sign_token) add_text(-slot.value, true, false);
    add_text(slot.value, false, false);
    if (is_whitelisted_constant(slot.value)) list.push_back({Candidate::Type::kConstant, 0, 1});
    const std::size_t text_count = list.size();
    for (std::size_t k = 0; k < text_count; ++k) {
      if (list[k].type != Candidate::Type::kText) continue;
      Candidate c = list[k];
      c.type = Candidate::Type::kReuse;
      c.cost = 2;
      list.push_back(c);
    }
    if (options.shuffle_seed) {
      std::mt19937_64 rng(*options.shuffle_seed + s);
      std::shuffle(list.begin(), list.end(), rng);
    }
  }

  std::vector<bool> used(numbers.size(), false);
  std::vector<const Candidate*> current(slots.size(), nullptr);
  std::vector<const Candidate*> best;
  bool found = false;
  int best_cost = std::numeric_limits<int>::max();
  std::size_t nodes = 0;
  std::size_t dead_slot = 0;

  std::function<void(std::size_t, int)> search = [&](std::size_t s, int cost) {
    if (cost >= best_cost || nodes >= options.node_limit) return;
    if (s >= slots.size()) {
      best = current;
      best_cost = cost;
      found = true;
      return;
    }
    if (cands[s].empty()) dead_slot = std::max(dead_slot, s + 1);
    for (const Candidate& c : cands[s]) {
      ++nodes;
      const bool text = c.type == Candidate::Type::kText;
      if (text && used[c.number]) continue;
      if (c.type == Candidate::Type::kReuse && !used[c.number]) continue;
      if (text) used[c.number] = true;
      current[s] = &c;
      if (c.fraction_match) {
        current[s + 1] = nullptr;
        search(s + 2, cost + c.cost);
      } else {
        search(s + 1, cost + c.cost);
      }
      if (text) used[c.number] = false;
      if (best_cost == 0) return;
    }
  };
  search(0, 0);
  if (!found) {
    if (dead_slot > 0) {
      throw UnalignableError("literal " + toks[slots[dead_slot - 1].token].text +
                             " matches no text number and is not a whitelisted constant");
    }
    throw UnalignableError("no consistent assignment of equation literals to text numbers");
  }

  std::vector<bool> drop(toks.size(), false);
  std::vector<std::string> replacement(toks.size());
  for (std::size_t s = 0; s < slots.size(); ++s) {
    if (best[s] == nullptr) continue;  // denominator folded into the previous slot
    const Candidate& c = *best[s];
    const Slot& slot = slots[s];
    if (c.type == Candidate::Type::kConstant) {
      replacement[slot.token] = to_string(slot.value);
      continue;
    }
    replacement[slot.token] = numbers[c.number].symbol();
    if (c.signed_match) drop[*slot.sign_token] = true;
    if (c.fraction_match) {
      drop[slot.token + 1] = true;
      drop[slot.token + 2] = true;
    }
  }
  EquationTemplate tmpl;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (drop[i]) continue;
    if (!replacement[i].empty()) {
      tmpl.tokens.push_back(replacement[i]);
    } else if (toks[i].kind == EqToken::Kind::kNumber) {
      tmpl.tokens.push_back(to_string(*parse_rational(toks[i].text)));
    } else {
      tmpl.tokens.push_back(toks[i].text);
    }
  }
  return tmpl;
}

// ---------------------------------------------------------------------------
// Substitution

std::string substitute(const EquationTemplate& tmpl, const NumberMapping& mapping) {
  std::string out;
  const auto& t = tmpl.tokens;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == ";") {
      out += "; ";
      continue;
    }
    if (!parse_symbol(t[i])) {
      out += t[i];
      continue;
    }
    auto value = mapping.lookup(t[i]);
    if (!value) {
      throw UnknownSymbolError("symbol " + t[i] + " has no number in the problem text");
    }
    const Rational mag = *value < 0 ? Rational(-*value) : *value;
    std::string body;
    if (auto dec = to_decimal_string(mag)) {
      body = *dec;
    } else {
      body = "(" + to_string(mag) + ")";
    }
    if (*value < 0) {
      const bool after_op = i > 0 && (t[i - 1] == "+" || t[i - 1] == "-" || t[i - 1] == "*" ||
                                      t[i - 1] == "/" || t[i - 1] == "^");
      const bool before_pow = i + 1 < t.size() && t[i + 1] == "^";
      body = "-" + body;
      if (after_op || before_pow) body = "(" + body + ")";
    }
    out += body;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Source tokens

std::vector<std::string> source_tokens(std::string_view text,
                                       const std::vector<ExtractedNumber>& numbers) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  std::size_t next = 0;
  for (std::size_t i = 0; i < text.size();) {
    if (next < numbers.size() && numbers[next].begin == i) {
      flush();
      out.push_back(numbers[next].symbol());
      if (numbers[next].form == NumberForm::kPercent) out.push_back("%");
      i = numbers[next].end;
      ++next;
      continue;
    }
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      flush();
    } else if (std::isalnum(c) || c == '\'' || c >= 0x80) {
      word += static_cast<char>(std::tolower(c));
    } else {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    }
    ++i;
  }
  flush();
  return out;
}

}  // namespace mwp
