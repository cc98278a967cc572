#include "mwp/corpus/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "mwp/equations/ast.hpp"
#include "mwp/model/config.hpp"

namespace mwp {

using nlohmann::json;

std::string answer_string(const Rational& r) {
  if (auto d = to_decimal_string(r)) return *d;
  return to_string(r);
}

json to_json(const Problem& p) {
  json j;
  j["id"] = p.id;
  j["text"] = p.text;
  j["equations"] = p.equations;
  j["answers"] = json::array();
  for (const auto& a : p.answers) j["answers"].push_back(answer_string(a));
  if (p.equation_template) j["template"] = p.equation_template->text();
  if (!p.template_source.empty()) j["source_template"] = p.template_source;
  return j;
}

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw DatasetError(line > 0 ? "line " + std::to_string(line) + ": " + what : what);
}

std::string required_string(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) fail(line, std::string("missing field '") + key + "'");
  if (!it->is_string()) fail(line, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

Problem problem_from_json(const json& j, std::size_t line) {
  if (!j.is_object()) fail(line, "expected a JSON object");
  Problem p;
  p.text = required_string(j, "text", line);
  p.equations = required_string(j, "equations", line);
  if (auto it = j.find("id"); it != j.end()) {
    p.id = it->is_string() ? it->get<std::string>() : it->dump();
  }
  auto answers = j.find("answers");
  if (answers == j.end() || !answers->is_array()) fail(line, "field 'answers' must be an array");
  for (const auto& a : *answers) {
    const std::string s = a.is_string() ? a.get<std::string>() : a.dump();
    auto r = parse_rational(s);
    if (!r) fail(line, "answer '" + s + "' is not a decimal or p/q rational");
    p.answers.push_back(*r);
  }
  if (auto it = j.find("template"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) fail(line, "field 'template' must be a string");
    p.equation_template = EquationTemplate::from_text(it->get<std::string>());
  }
  if (auto it = j.find("source_template"); it != j.end() && it->is_string()) {
    p.template_source = it->get<std::string>();
  }
  return p;
}

std::vector<Problem> load_problems(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open " + path.string());
  std::vector<Problem> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(line, std::string("invalid JSON: ") + e.what());
    }
    out.push_back(problem_from_json(j, line));
    if (out.back().id.empty()) out.back().id = std::to_string(out.size() - 1);
  }
  return out;
}

void save_problems(const std::filesystem::path& path, const std::vector<Problem>& problems) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DatasetError("cannot open " + path.string() + " for writing");
  for (const auto& p : problems) out << to_json(p).dump() << '\n';
  if (!out) throw DatasetError("failed writing " + path.string());
}

Preprocessed preprocess(const Problem& p) {
  Preprocessed out;
  out.numbers = extract_numbers(p.text);
  if (out.numbers.size() > kMaxNumberIndex) {
    out.reason = "more than " + std::to_string(kMaxNumberIndex) + " numbers in the text";
    return out;
  }
  try {
    out.equation_template = align(out.numbers, p.equations);
  } catch (const UnalignableError& e) {
    out.reason = e.what();
  } catch (const ParseError& e) {
    out.reason = std::string("gold equations do not parse: ") + e.what();
  }
  return out;
}

std::vector<std::string> problem_source_tokens(const Problem& p) {
  return source_tokens(p.text, extract_numbers(p.text));
}

Example encode_example(const Problem& p, std::size_t index, const Vocabulary& source_vocab,
                       const Vocabulary& target_vocab) {
  Example ex;
  ex.problem = index;
  ex.answers = p.answers;
  ex.mapping.numbers = extract_numbers(p.text);
  ex.source = source_vocab.encode(source_tokens(p.text, ex.mapping.numbers));
  if (ex.source.empty()) ex.source.push_back(kUnk);

  std::optional<EquationTemplate> tmpl = p.equation_template;
  if (!tmpl && ex.mapping.numbers.size() <= kMaxNumberIndex) tmpl = preprocess(p).equation_template;
  if (tmpl && ex.mapping.numbers.size() <= kMaxNumberIndex &&
      std::all_of(tmpl->tokens.begin(), tmpl->tokens.end(),
                  [&](const std::string& t) { return target_vocab.contains(t); })) {
    ex.target = target_vocab.encode(tmpl->tokens);
  }
  return ex;
}

std::vector<Example> encode_examples(const std::vector<Problem>& problems,
                                     const std::vector<std::size_t>& indices,
                                     const Vocabulary& source_vocab,
                                     const Vocabulary& target_vocab) {
  std::vector<Example> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    out.push_back(encode_example(problems.at(i), i, source_vocab, target_vocab));
  }
  return out;
}

Vocabulary build_source_vocabulary(const std::vector<Problem>& problems,
                                   const std::vector<std::size_t>& indices) {
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(indices.size());
  for (std::size_t i : indices) sentences.push_back(problem_source_tokens(problems.at(i)));
  return Vocabulary::build(sentences);
}

namespace {

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

}  // namespace

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k,
                                                 std::uint64_t seed) {
  if (k < 2) throw ConfigError("need at least 2 folds");
  if (k > n) throw ConfigError("more folds than problems");
  const auto idx = shuffled(n, seed);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    folds[f].assign(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                    idx.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return folds;
}

Split make_split(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  const auto idx = shuffled(n, seed);
  const auto cut = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cut));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(cut), idx.end());
  return s;
}

}  // namespace mwp
