#include "mwp/equations/ast.hpp"

#include <cctype>
#include <cmath>

namespace mwp {

namespace {

bool is_symbol_prefix(char c) { return c == 'M' || c == 'F' || c == 'N'; }

bool is_variable(char c) { return c == 'x' || c == 'y' || c == 'z'; }

int var_index(char c) { return c - 'x'; }

}  // namespace

std::vector<EqToken> tokenize_equation(std::string_view text) {
  std::vector<EqToken> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      bool seen_dot = false;
      while (j < text.size() &&
             (std::isdigit(static_cast<unsigned char>(text[j])) || (text[j] == '.' && !seen_dot))) {
        seen_dot = seen_dot || text[j] == '.';
        ++j;
      }
      std::string num(text.substr(i, j - i));
      if (num == ".") throw ParseError("stray '.' at offset " + std::to_string(i));
      out.push_back({EqToken::Kind::kNumber, num});
      i = j;
      continue;
    }
    if (is_symbol_prefix(c) && i + 2 < text.size() && text[i + 1] == '_' &&
        std::isdigit(static_cast<unsigned char>(text[i + 2]))) {
      std::size_t j = i + 2;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      out.push_back({EqToken::Kind::kSymbol, std::string(text.substr(i, j - i))});
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      if (!is_variable(c) ||
          (i + 1 < text.size() && std::isalnum(static_cast<unsigned char>(text[i + 1])))) {
        throw ParseError("unknown identifier at offset " + std::to_string(i));
      }
      out.push_back({EqToken::Kind::kVariable, std::string(1, c)});
      ++i;
      continue;
    }
    EqToken::Kind kind;
    switch (c) {
      case '+':
      case '-':
      case '*':
      case '/':
      case '^':
        kind = EqToken::Kind::kOperator;
        break;
      case '(':
        kind = EqToken::Kind::kLParen;
        break;
      case ')':
        kind = EqToken::Kind::kRParen;
        break;
      case '=':
        kind = EqToken::Kind::kEquals;
        break;
      case ';':
        kind = EqToken::Kind::kSemicolon;
        break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "' at offset " +
                         std::to_string(i));
    }
    out.push_back({kind, std::string(1, c)});
    ++i;
  }
  return out;
}

EqToken classify_token(std::string_view text) {
  auto toks = tokenize_equation(text);
  if (toks.size() != 1) throw ParseError("'" + std::string(text) + "' is not a single token");
  return toks.front();
}

// ---------------------------------------------------------------------------
// AST construction

ExprPtr Expr::number(Rational v) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kNumber;
  e->value = std::move(v);
  return e;
}

ExprPtr Expr::var(char name) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kVariable;
  e->variable = name;
  return e;
}

ExprPtr Expr::neg(ExprPtr operand) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kNeg;
  e->lhs = std::move(operand);
  return e;
}

ExprPtr Expr::binary(Kind kind, ExprPtr l, ExprPtr r) {
  auto e = std::make_shared<Expr>();
  e->kind = kind;
  e->lhs = std::move(l);
  e->rhs = std::move(r);
  return e;
}

ExprPtr Expr::power(ExprPtr base, int exponent) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kPow;
  e->lhs = std::move(base);
  e->exponent = exponent;
  return e;
}

bool equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::kNumber:
      return a.value == b.value;
    case Expr::Kind::kVariable:
      return a.variable == b.variable;
    case Expr::Kind::kNeg:
      return equal(*a.lhs, *b.lhs);
    case Expr::Kind::kPow:
      return a.exponent == b.exponent && equal(*a.lhs, *b.lhs);
    default:
      return equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
  }
}

bool equal(const EquationAst& a, const EquationAst& b) {
  if (a.equations.size() != b.equations.size()) return false;
  for (std::size_t i = 0; i < a.equations.size(); ++i) {
    if (!equal(*a.equations[i].lhs, *b.equations[i].lhs) ||
        !equal(*a.equations[i].rhs, *b.equations[i].rhs)) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Recursive descent parser

namespace {

class Parser {
 public:
  explicit Parser(const std::vector<EqToken>& tokens) : toks_(tokens) {}

  EquationAst equations() {
    EquationAst ast;
    if (toks_.empty()) throw ParseError("empty equation text");
    while (true) {
      ExprPtr lhs = side("left");
      expect(EqToken::Kind::kEquals, "'='");
      ExprPtr rhs = side("right");
      ast.equations.push_back({lhs, rhs});
      if (at_end()) break;
      if (peek().kind == EqToken::Kind::kEquals) throw error("more than one '=' in an equation");
      expect(EqToken::Kind::kSemicolon, "';'");
      if (at_end()) break;  // trailing ';'
    }
    return ast;
  }

  ExprPtr single_expression() {
    ExprPtr e = side("expression");
    if (!at_end()) throw error("unexpected token '" + peek().text + "'");
    return e;
  }

 private:
  bool at_end() const { return pos_ >= toks_.size(); }
  const EqToken& peek() const { return toks_[pos_]; }
  bool peek_op(char op) const {
    return !at_end() && peek().kind == EqToken::Kind::kOperator && peek().text[0] == op;
  }

  ParseError error(const std::string& what) const {
    return ParseError(what + " (token " + std::to_string(pos_) + ")");
  }

  void expect(EqToken::Kind kind, const char* what) {
    if (at_end() || peek().kind != kind) {
      throw error(std::string("expected ") + what +
                  (at_end() ? " but reached end" : " but found '" + peek().text + "'"));
    }
    ++pos_;
  }

  ExprPtr side(const char* which) {
    if (at_end() || peek().kind == EqToken::Kind::kEquals ||
        peek().kind == EqToken::Kind::kSemicolon) {
      throw error(std::string("empty ") + which + " side");
    }
    return expr();
  }

  ExprPtr expr() {
    ExprPtr e = term(true);
    while (peek_op('+') || peek_op('-')) {
      const auto kind = peek().text[0] == '+' ? Expr::Kind::kAdd : Expr::Kind::kSub;
      ++pos_;
      e = Expr::binary(kind, e, term(false));
    }
    return e;
  }

  ExprPtr term(bool leading) {
    ExprPtr e = unary(leading);
    while (peek_op('*') || peek_op('/')) {
      const auto kind = peek().text[0] == '*' ? Expr::Kind::kMul : Expr::Kind::kDiv;
      ++pos_;
      e = Expr::binary(kind, e, unary(false));
    }
    return e;
  }

  ExprPtr unary(bool allow_minus) {
    if (peek_op('-')) {
      if (!allow_minus) throw error("adjacent operators");
      ++pos_;
      return Expr::neg(power());
    }
    return power();
  }

  ExprPtr power() {
    ExprPtr base = primary();
    if (!peek_op('^')) return base;
    ++pos_;
    const int exp = exponent();
    if (peek_op('^')) throw error("exponent must be an integer literal");
    return Expr::power(base, exp);
  }

  int exponent() {
    bool paren = false;
    if (!at_end() && peek().kind == EqToken::Kind::kLParen) {
      paren = true;
      ++pos_;
    }
    bool negative = false;
    if (peek_op('-')) {
      negative = true;
      ++pos_;
    }
    if (at_end() || peek().kind != EqToken::Kind::kNumber) {
      throw error("exponent must be an integer literal");
    }
    auto value = parse_rational(peek().text);
    if (!value || boost::multiprecision::denominator(*value) != 1 || *value > kMaxExponent) {
      throw error("exponent must be an integer with magnitude at most " + std::to_string(kMaxExponent));
    }
    ++pos_;
    if (paren) expect(EqToken::Kind::kRParen, "')'");
    const int e = value->convert_to<int>();
    return negative ? -e : e;
  }

  ExprPtr primary() {
    if (at_end()) throw error("unexpected end of input");
    const EqToken& t = peek();
    switch (t.kind) {
      case EqToken::Kind::kNumber: {
        auto value = parse_rational(t.text);
        if (!value) throw error("malformed number '" + t.text + "'");
        ++pos_;
        return Expr::number(*value);
      }
      case EqToken::Kind::kVariable:
        ++pos_;
        return Expr::var(t.text[0]);
      case EqToken::Kind::kLParen: {
        ++pos_;
        if (!at_end() && peek().kind == EqToken::Kind::kRParen) throw error("empty parentheses");
        ExprPtr inner = expr();
        expect(EqToken::Kind::kRParen, "')'");
        return inner;
      }
      case EqToken::Kind::kSymbol:
        throw error("unsubstituted number symbol '" + t.text + "'");
      case EqToken::Kind::kOperator:
        throw error("adjacent operators");
      default:
        throw error("unexpected token '" + t.text + "'");
    }
  }

  const std::vector<EqToken>& toks_;
  std::size_t pos_ = 0;
};

}  // namespace

EquationAst parse_equations(const std::vector<EqToken>& tokens) { return Parser(tokens).equations(); }

EquationAst parse_equations(std::string_view text) { return parse_equations(tokenize_equation(text)); }

ExprPtr parse_expression(std::string_view text) {
  const auto toks = tokenize_equation(text);
  if (toks.empty()) throw ParseError("empty expression");
  return Parser(toks).single_expression();
}

// ---------------------------------------------------------------------------
// Printing and evaluation

std::string print(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::kNumber: {
      if (e.value < 0) return "(-" + print(*Expr::number(-e.value)) + ")";
      if (auto dec = to_decimal_string(e.value)) return *dec;
      return "(" + to_string(e.value) + ")";
    }
    case Expr::Kind::kVariable:
      return std::string(1, e.variable);
    case Expr::Kind::kNeg:
      return "(-" + print(*e.lhs) + ")";
    case Expr::Kind::kPow:
      return "(" + print(*e.lhs) + "^" + std::to_string(e.exponent) + ")";
    case Expr::Kind::kAdd:
      return "(" + print(*e.lhs) + "+" + print(*e.rhs) + ")";
    case Expr::Kind::kSub:
      return "(" + print(*e.lhs) + "-" + print(*e.rhs) + ")";
    case Expr::Kind::kMul:
      return "(" + print(*e.lhs) + "*" + print(*e.rhs) + ")";
    case Expr::Kind::kDiv:
      return "(" + print(*e.lhs) + "/" + print(*e.rhs) + ")";
  }
  return {};
}

std::string print(const EquationAst& ast) {
  std::string out;
  for (std::size_t i = 0; i < ast.equations.size(); ++i) {
    if (i) out += "; ";
    out += print(*ast.equations[i].lhs) + "=" + print(*ast.equations[i].rhs);
  }
  return out;
}

double evaluate(const Expr& e, const double env[3]) {
  switch (e.kind) {
    case Expr::Kind::kNumber:
      return to_double(e.value);
    case Expr::Kind::kVariable:
      return env[var_index(e.variable)];
    case Expr::Kind::kNeg:
      return -evaluate(*e.lhs, env);
    case Expr::Kind::kPow:
      return std::pow(evaluate(*e.lhs, env), e.exponent);
    case Expr::Kind::kAdd:
      return evaluate(*e.lhs, env) + evaluate(*e.rhs, env);
    case Expr::Kind::kSub:
      return evaluate(*e.lhs, env) - evaluate(*e.rhs, env);
    case Expr::Kind::kMul:
      return evaluate(*e.lhs, env) * evaluate(*e.rhs, env);
    case Expr::Kind::kDiv:
      return evaluate(*e.lhs, env) / evaluate(*e.rhs, env);
  }
  return 0.0;
}

std::optional<Rational> evaluate_exact(const Expr& e, const Rational env[3]) {
  switch (e.kind) {
    case Expr::Kind::kNumber:
      return e.value;
    case Expr::Kind::kVariable:
      return env[var_index(e.variable)];
    case Expr::Kind::kNeg: {
      auto v = evaluate_exact(*e.lhs, env);
      if (!v) return std::nullopt;
      return -*v;
    }
    case Expr::Kind::kPow: {
      auto base = evaluate_exact(*e.lhs, env);
      if (!base) return std::nullopt;
      if (e.exponent < 0 && *base == 0) return std::nullopt;
      Rational r = 1;
      for (int i = 0; i < std::abs(e.exponent); ++i) r *= *base;
      return e.exponent < 0 ? Rational(1) / r : r;
    }
    default: {
      auto a = evaluate_exact(*e.lhs, env);
      auto b = evaluate_exact(*e.rhs, env);
      if (!a || !b) return std::nullopt;
      switch (e.kind) {
        case Expr::Kind::kAdd:
          return *a + *b;
        case Expr::Kind::kSub:
          return *a - *b;
        case Expr::Kind::kMul:
          return *a * *b;
        default:
          if (*b == 0) return std::nullopt;
          return *a / *b;
      }
    }
  }
}

}  // namespace mwp
