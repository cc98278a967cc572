#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mwp/equations/rational.hpp"

namespace mwp {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lexical tokens of the equation language. Number-token symbols (M_i, F_i,
// N_i) are recognised so templates can share the tokenizer.
struct EqToken {
  enum class Kind { kNumber, kVariable, kSymbol, kOperator, kLParen, kRParen, kEquals, kSemicolon };
  Kind kind;
  std::string text;
};

std::vector<EqToken> tokenize_equation(std::string_view text);
// Classifies a single token string (as stored in a template).
EqToken classify_token(std::string_view text);

inline constexpr int kMaxExponent = 3;

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { kNumber, kVariable, kNeg, kAdd, kSub, kMul, kDiv, kPow };
  Kind kind = Kind::kNumber;
  Rational value;         // kNumber
  char variable = 0;      // kVariable: 'x', 'y' or 'z'
  ExprPtr lhs;            // operand of kNeg, left operand, base of kPow
  ExprPtr rhs;            // right operand of binary ops
  int exponent = 0;       // kPow, |exponent| <= kMaxExponent

  static ExprPtr number(Rational v);
  static ExprPtr var(char name);
  static ExprPtr neg(ExprPtr operand);
  static ExprPtr binary(Kind kind, ExprPtr l, ExprPtr r);
  static ExprPtr power(ExprPtr base, int exponent);
};

bool equal(const Expr& a, const Expr& b);

struct Equation {
  ExprPtr lhs;
  ExprPtr rhs;
};

struct EquationAst {
  std::vector<Equation> equations;
};

bool equal(const EquationAst& a, const EquationAst& b);

// Precedence: ^ (right-assoc, integer literal exponent) > unary minus > * /
// > + -. Unary minus may only open an expression (start of a side or right
// after '('), so "x+-3" is rejected as adjacent operators. ';' separates
// equations; each needs exactly one '='.
EquationAst parse_equations(std::string_view text);
EquationAst parse_equations(const std::vector<EqToken>& tokens);
// A single expression without '='.
ExprPtr parse_expression(std::string_view text);

// Fully parenthesised rendering; parse_equations(print(ast)) reproduces any
// ast without negative literals (those come back as a negation).
std::string print(const Expr& e);
std::string print(const EquationAst& ast);

// Numeric evaluation; variables looked up in `env` (indexed 'x','y','z').
double evaluate(const Expr& e, const double env[3]);
std::optional<Rational> evaluate_exact(const Expr& e, const Rational env[3]);

}  // namespace mwp
