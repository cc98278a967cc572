#include "mwp/equations/reward.hpp"

#include <exception>

#include "mwp/equations/ast.hpp"

namespace mwp {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kCorrect:
      return "correct";
    case Verdict::kUnknownSymbol:
      return "unknown_symbol";
    case Verdict::kParseError:
      return "parse_error";
    case Verdict::kUnsolved:
      return "unsolved";
    case Verdict::kWrongAnswer:
      return "wrong_answer";
  }
  return "?";
}

Judgement judge(const std::vector<std::string>& template_tokens, const NumberMapping& mapping,
                const std::vector<Rational>& gold) {
  Judgement j;
  try {
    j.equations = substitute(EquationTemplate{template_tokens}, mapping);
  } catch (const UnknownSymbolError&) {
    j.verdict = Verdict::kUnknownSymbol;
    return j;
  } catch (const std::exception&) {
    j.verdict = Verdict::kParseError;
    return j;
  }
  EquationAst ast;
  try {
    ast = parse_equations(j.equations);
  } catch (const std::exception&) {
    j.verdict = Verdict::kParseError;
    return j;
  }
  try {
    j.solution = solve(ast);
  } catch (const std::exception&) {
    j.verdict = Verdict::kUnsolved;
    return j;
  }
  if (j.solution.status != SolutionStatus::kSolved) {
    j.verdict = Verdict::kUnsolved;
    return j;
  }
  j.verdict = check_answer(j.solution, gold) ? Verdict::kCorrect : Verdict::kWrongAnswer;
  return j;
}

int reward(const std::vector<std::string>& template_tokens, const NumberMapping& mapping,
           const std::vector<Rational>& gold) {
  return judge(template_tokens, mapping, gold).verdict == Verdict::kCorrect ? 1 : 0;
}

}  // namespace mwp
