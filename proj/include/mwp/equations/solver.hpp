#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mwp/equations/ast.hpp"
#include "mwp/equations/rational.hpp"

namespace mwp {

enum class SolutionStatus { kSolved, kNoSolution, kInfiniteSolutions, kUnsupported };

const char* to_string(SolutionStatus s);

// An exact rational, or an irrational real root carried as a double.
struct SolutionValue {
  std::optional<Rational> exact;
  double approx = 0.0;

  static SolutionValue of(Rational r);
  static SolutionValue real(double v);
  std::string to_string() const;
};

struct Assignment {
  char variable = 'x';
  SolutionValue value;
};

// Linear systems yield one assignment per variable; a quadratic yields one
// assignment per distinct real root of its single variable.
struct SolutionSet {
  SolutionStatus status = SolutionStatus::kUnsupported;
  std::vector<Assignment> assignments;
  std::string reason;
};

// Supports linear systems in x, y, z (exact Gaussian elimination) and a single
// univariate equation of degree <= 2. Anything else, including division by a
// non-constant or by zero, is reported as kUnsupported.
SolutionSet solve(const EquationAst& ast);

// Largest |lhs - rhs| over all equations when every assignment of a solved
// linear system is substituted. For quadratics each root is checked alone.
double max_residual(const EquationAst& ast, const SolutionSet& sol);

inline constexpr double kAnswerTolerance = 1e-4;

// Multiset comparison of the solution values against gold answers with
// |a - b| <= 1e-4 * max(1, |b|).
bool check_answer(const SolutionSet& sol, const std::vector<Rational>& gold);
bool answers_match(const std::vector<double>& values, const std::vector<double>& gold,
                   double tolerance = kAnswerTolerance);

}  // namespace mwp
