#include "mwp/equations/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>

namespace mwp {

const char* to_string(SolutionStatus s) {
  switch (s) {
    case SolutionStatus::kSolved:
      return "solved";
    case SolutionStatus::kNoSolution:
      return "no_solution";
    case SolutionStatus::kInfiniteSolutions:
      return "infinite_solutions";
    case SolutionStatus::kUnsupported:
      return "unsupported";
  }
  return "?";
}

SolutionValue SolutionValue::of(Rational r) {
  SolutionValue v;
  v.approx = to_double(r);
  v.exact = std::move(r);
  return v;
}

SolutionValue SolutionValue::real(double d) {
  SolutionValue v;
  v.approx = d;
  return v;
}

std::string SolutionValue::to_string() const {
  if (exact) return mwp::to_string(*exact);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", approx);
  return buf;
}

namespace {

// Polynomial in x, y, z with rational coefficients.
using Monomial = std::array<int, 3>;
using Polynomial = std::map<Monomial, Rational>;

struct Unsupported {
  std::string reason;
};

void add_term(Polynomial& p, const Monomial& m, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = p.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) p.erase(it);
  }
}

Polynomial constant(const Rational& c) {
  Polynomial p;
  add_term(p, {0, 0, 0}, c);
  return p;
}

Polynomial plus(const Polynomial& a, const Polynomial& b, const Rational& sign) {
  Polynomial out = a;
  for (const auto& [m, c] : b) add_term(out, m, sign * c);
  return out;
}

int degree(const Monomial& m) { return m[0] + m[1] + m[2]; }

int degree(const Polynomial& p) {
  int d = 0;
  for (const auto& [m, c] : p) d = std::max(d, degree(m));
  return d;
}

constexpr int kMaxWorkingDegree = 6;

Polynomial times(const Polynomial& a, const Polynomial& b) {
  Polynomial out;
  for (const auto& [ma, ca] : a) {
    for (const auto& [mb, cb] : b) {
      Monomial m{ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2]};
      if (degree(m) > kMaxWorkingDegree) throw Unsupported{"degree too high"};
      add_term(out, m, ca * cb);
    }
  }
  return out;
}

std::optional<Rational> as_constant(const Polynomial& p) {
  if (p.empty()) return Rational(0);
  if (p.size() == 1 && degree(p.begin()->first) == 0) return p.begin()->second;
  return std::nullopt;
}

Polynomial expand(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::kNumber:
      return constant(e.value);
    case Expr::Kind::kVariable: {
      Monomial m{0, 0, 0};
      m[static_cast<std::size_t>(e.variable - 'x')] = 1;
      Polynomial p;
      add_term(p, m, 1);
      return p;
    }
    case Expr::Kind::kNeg:
      return plus(Polynomial{}, expand(*e.lhs), -1);
    case Expr::Kind::kAdd:
      return plus(expand(*e.lhs), expand(*e.rhs), 1);
    case Expr::Kind::kSub:
      return plus(expand(*e.lhs), expand(*e.rhs), -1);
    case Expr::Kind::kMul:
      return times(expand(*e.lhs), expand(*e.rhs));
    case Expr::Kind::kDiv: {
      const Polynomial den = expand(*e.rhs);
      auto c = as_constant(den);
      if (!c) throw Unsupported{"division by a non-constant expression"};
      if (*c == 0) throw Unsupported{"division by zero"};
      return times(expand(*e.lhs), constant(Rational(1) / *c));
    }
    case Expr::Kind::kPow: {
      const Polynomial base = expand(*e.lhs);
      if (e.exponent < 0) {
        auto c = as_constant(base);
        if (!c) throw Unsupported{"negative power of a non-constant expression"};
        if (*c == 0) throw Unsupported{"division by zero"};
        Rational r = 1;
        for (int i = 0; i < -e.exponent; ++i) r /= *c;
        return constant(r);
      }
      Polynomial out = constant(1);
      for (int i = 0; i < e.exponent; ++i) out = times(out, base);
      return out;
    }
  }
  return {};
}

void collect_variables(const Expr& e, std::array<bool, 3>& seen) {
  if (e.kind == Expr::Kind::kVariable) seen[static_cast<std::size_t>(e.variable - 'x')] = true;
  if (e.lhs) collect_variables(*e.lhs, seen);
  if (e.rhs) collect_variables(*e.rhs, seen);
}

SolutionSet status_only(SolutionStatus s, std::string reason = {}) {
  SolutionSet out;
  out.status = s;
  out.reason = std::move(reason);
  return out;
}

// Exact reduced row echelon form on [A | b].
SolutionSet solve_linear(const std::vector<Polynomial>& polys, const std::vector<int>& vars) {
  const std::size_t n = vars.size();
  std::vector<std::vector<Rational>> rows;
  for (const Polynomial& p : polys) {
    std::vector<Rational> row(n + 1, Rational(0));
    for (const auto& [m, c] : p) {
      if (degree(m) == 0) {
        row[n] = -c;
        continue;
      }
      for (std::size_t k = 0; k < n; ++k) {
        if (m[static_cast<std::size_t>(vars[k])] == 1) row[k] = c;
      }
    }
    rows.push_back(std::move(row));
  }
  std::size_t rank = 0;
  std::vector<std::size_t> pivot_col;
  for (std::size_t col = 0; col < n && rank < rows.size(); ++col) {
    std::size_t pivot = rank;
    while (pivot < rows.size() && rows[pivot][col] == 0) ++pivot;
    if (pivot == rows.size()) continue;
    std::swap(rows[rank], rows[pivot]);
    const Rational inv = Rational(1) / rows[rank][col];
    for (auto& v : rows[rank]) v *= inv;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r == rank || rows[r][col] == 0) continue;
      const Rational f = rows[r][col];
      for (std::size_t k = col; k <= n; ++k) rows[r][k] -= f * rows[rank][k];
    }
    pivot_col.push_back(col);
    ++rank;
  }
  for (std::size_t r = rank; r < rows.size(); ++r) {
    if (rows[r][n] != 0) return status_only(SolutionStatus::kNoSolution, "inconsistent system");
  }
  if (rank < n) return status_only(SolutionStatus::kInfiniteSolutions, "underdetermined system");
  SolutionSet out;
  out.status = SolutionStatus::kSolved;
  for (std::size_t r = 0; r < n; ++r) {
    out.assignments.push_back({static_cast<char>('x' + vars[pivot_col[r]]), SolutionValue::of(rows[r][n])});
  }
  return out;
}

SolutionSet solve_quadratic(const Polynomial& p, int var) {
  Rational a = 0, b = 0, c = 0;
  for (const auto& [m, coef] : p) {
    switch (m[static_cast<std::size_t>(var)]) {
      case 2:
        a = coef;
        break;
      case 1:
        b = coef;
        break;
      default:
        c = coef;
    }
  }
  const char name = static_cast<char>('x' + var);
  const Rational disc = b * b - 4 * a * c;
  if (disc < 0) return status_only(SolutionStatus::kNoSolution, "no real roots");
  SolutionSet out;
  out.status = SolutionStatus::kSolved;
  if (disc == 0) {
    out.assignments.push_back({name, SolutionValue::of(-b / (2 * a))});
    return out;
  }
  if (auto root = exact_sqrt(disc)) {
    Rational r1 = (-b - *root) / (2 * a);
    Rational r2 = (-b + *root) / (2 * a);
    if (r2 < r1) std::swap(r1, r2);
    out.assignments.push_back({name, SolutionValue::of(r1)});
    out.assignments.push_back({name, SolutionValue::of(r2)});
    return out;
  }
  const double da = to_double(a), db = to_double(b), dc = to_double(c);
  const double sq = std::sqrt(to_double(disc));
  const double q = -0.5 * (db + (db >= 0 ? sq : -sq));
  double r1 = q / da;
  double r2 = dc / q;
  if (r2 < r1) std::swap(r1, r2);
  out.assignments.push_back({name, SolutionValue::real(r1)});
  out.assignments.push_back({name, SolutionValue::real(r2)});
  return out;
}

}  // namespace

SolutionSet solve(const EquationAst& ast) {
  if (ast.equations.empty()) return status_only(SolutionStatus::kUnsupported, "no equations");
  std::vector<Polynomial> polys;
  std::array<bool, 3> seen{false, false, false};
  try {
    for (const Equation& eq : ast.equations) {
      collect_variables(*eq.lhs, seen);
      collect_variables(*eq.rhs, seen);
      polys.push_back(plus(expand(*eq.lhs), expand(*eq.rhs), -1));
    }
  } catch (const Unsupported& u) {
    return status_only(SolutionStatus::kUnsupported, u.reason);
  }
  std::vector<int> vars;
  for (int v = 0; v < 3; ++v) {
    if (seen[static_cast<std::size_t>(v)]) vars.push_back(v);
  }
  int max_degree = 0;
  for (const auto& p : polys) max_degree = std::max(max_degree, degree(p));

  if (max_degree <= 1) {
    if (vars.empty()) {
      for (const auto& p : polys) {
        if (!p.empty()) return status_only(SolutionStatus::kNoSolution, "false constant equation");
      }
      return status_only(SolutionStatus::kInfiniteSolutions, "no unknowns");
    }
    return solve_linear(polys, vars);
  }
  if (max_degree > 2) return status_only(SolutionStatus::kUnsupported, "degree above 2");
  if (vars.size() != 1) {
    return status_only(SolutionStatus::kUnsupported, "nonlinear system in several variables");
  }
  const Polynomial* quadratic = nullptr;
  for (const auto& p : polys) {
    if (p.empty()) continue;
    if (quadratic != nullptr) {
      return status_only(SolutionStatus::kUnsupported, "several equations with a quadratic");
    }
    quadratic = &p;
  }
  return solve_quadratic(*quadratic, vars.front());
}

double max_residual(const EquationAst& ast, const SolutionSet& sol) {
  if (sol.status != SolutionStatus::kSolved) return 0.0;
  auto residual_with = [&](const double env[3]) {
    double worst = 0.0;
    for (const Equation& eq : ast.equations) {
      worst = std::max(worst, std::abs(evaluate(*eq.lhs, env) - evaluate(*eq.rhs, env)));
    }
    return worst;
  };
  std::map<char, int> per_var;
  for (const auto& a : sol.assignments) ++per_var[a.variable];
  const bool roots = per_var.size() == 1 && sol.assignments.size() > 1;
  double worst = 0.0;
  if (roots) {
    for (const auto& a : sol.assignments) {
      double env[3] = {0, 0, 0};
      env[a.variable - 'x'] = a.value.approx;
      worst = std::max(worst, residual_with(env));
    }
  } else {
    double env[3] = {0, 0, 0};
    for (const auto& a : sol.assignments) env[a.variable - 'x'] = a.value.approx;
    worst = residual_with(env);
  }
  return worst;
}

bool answers_match(const std::vector<double>& values, const std::vector<double>& gold,
                   double tolerance) {
  if (values.size() != gold.size() || gold.empty()) return false;
  std::vector<bool> used(values.size(), false);
  // Backtracking bipartite match; answer lists are tiny.
  std::function<bool(std::size_t)> match = [&](std::size_t g) {
    if (g == gold.size()) return true;
    const double limit = tolerance * std::max(1.0, std::abs(gold[g]));
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (used[i] || std::abs(values[i] - gold[g]) > limit) continue;
      used[i] = true;
      if (match(g + 1)) return true;
      used[i] = false;
    }
    return false;
  };
  return match(0);
}

bool check_answer(const SolutionSet& sol, const std::vector<Rational>& gold) {
  if (sol.status != SolutionStatus::kSolved || gold.empty()) return false;
  std::vector<double> values;
  for (const auto& a : sol.assignments) values.push_back(a.value.approx);
  std::vector<double> g;
  for (const auto& r : gold) g.push_back(to_double(r));
  return answers_match(values, g);
}

}  // namespace mwp
