#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mwp/corpus/vocabulary.hpp"
#include "mwp/equations/rational.hpp"
#include "mwp/numbering/numbering.hpp"

namespace mwp {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Problem {
  std::string id;
  std::string text;
  std::string equations;  // gold, ';'-separated
  std::vector<Rational> answers;
  // Filled in by preprocessing; absent when alignment failed or was not run.
  std::optional<EquationTemplate> equation_template;
  std::string template_source;  // generator template name, if any
};

nlohmann::json to_json(const Problem& p);
// `line` is only used in error messages.
Problem problem_from_json(const nlohmann::json& j, std::size_t line = 0);

// One JSON object per line; blank lines are skipped. A malformed line raises
// DatasetError naming its 1-based line number.
std::vector<Problem> load_problems(const std::filesystem::path& path);
void save_problems(const std::filesystem::path& path, const std::vector<Problem>& problems);

// Answers are written as terminating decimals when possible, else "p/q".
std::string answer_string(const Rational& r);

// Extracts numbers and aligns the gold equations. The template is left empty
// when the problem is unalignable; `reason` then says why.
struct Preprocessed {
  std::vector<ExtractedNumber> numbers;
  std::optional<EquationTemplate> equation_template;
  std::string reason;
};
Preprocessed preprocess(const Problem& p);

// A problem encoded for the model.
struct Example {
  std::size_t problem = 0;  // index into the originating problem list
  std::vector<int> source;
  std::vector<int> target;  // canonical template ids; empty when unalignable
  NumberMapping mapping;
  std::vector<Rational> answers;

  bool alignable() const { return !target.empty(); }
};

std::vector<std::string> problem_source_tokens(const Problem& p);

// Uses the stored template when present, otherwise aligns on the fly.
Example encode_example(const Problem& p, std::size_t index, const Vocabulary& source_vocab,
                       const Vocabulary& target_vocab);
std::vector<Example> encode_examples(const std::vector<Problem>& problems,
                                     const std::vector<std::size_t>& indices,
                                     const Vocabulary& source_vocab,
                                     const Vocabulary& target_vocab);

// Source vocabulary from the given problems only.
Vocabulary build_source_vocabulary(const std::vector<Problem>& problems,
                                   const std::vector<std::size_t>& indices);

// k disjoint folds covering 0..n-1, sizes differing by at most one,
// deterministic in `seed`.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

// Shuffled split: the first round(n * train_fraction) indices train.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
Split make_split(std::size_t n, double train_fraction, std::uint64_t seed);

}  // namespace mwp
