#pragma once

#include <string>
#include <vector>

#include "mwp/equations/rational.hpp"
#include "mwp/equations/solver.hpp"
#include "mwp/numbering/numbering.hpp"

namespace mwp {

// Why a generated template earned no reward.
enum class Verdict { kCorrect, kUnknownSymbol, kParseError, kUnsolved, kWrongAnswer };

const char* to_string(Verdict v);

struct Judgement {
  Verdict verdict = Verdict::kParseError;
  std::string equations;  // concrete text after substitution, when it got that far
  SolutionSet solution;
};

// substitute -> parse -> solve -> check_answer. Never throws.
Judgement judge(const std::vector<std::string>& template_tokens, const NumberMapping& mapping,
                const std::vector<Rational>& gold);

// 1 when the template solves to the gold answers, 0 otherwise.
int reward(const std::vector<std::string>& template_tokens, const NumberMapping& mapping,
           const std::vector<Rational>& gold);

}  // namespace mwp
