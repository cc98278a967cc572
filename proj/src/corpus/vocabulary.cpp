#include "mwp/corpus/vocabulary.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mwp/model/config.hpp"
#include "mwp/numbering/numbering.hpp"

namespace mwp {

namespace {

const std::vector<std::string>& reserved() {
  static const std::vector<std::string> names = {"<pad>", "<bos>", "<bos_r>", "<eos>", "<unk>"};
  return names;
}

void add_symbols(Vocabulary& v) {
  for (NumberKind kind : {NumberKind::kNegative, NumberKind::kUnitFraction, NumberKind::kOther}) {
    for (std::size_t i = 1; i <= kMaxNumberIndex; ++i) v.add(make_symbol(kind, i));
  }
}

}  // namespace

Vocabulary::Vocabulary() {
  for (const auto& t : reserved()) add(t);
}

Vocabulary Vocabulary::target() {
  Vocabulary v;
  for (const char* t : {"+", "-", "*", "/", "^", "(", ")", "=", ";", "x", "y", "z"}) v.add(t);
  for (int c : whitelisted_constants()) v.add(std::to_string(c));
  add_symbols(v);
  return v;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& sentences) {
  Vocabulary v;
  add_symbols(v);
  for (const auto& s : sentences) {
    for (const auto& t : s) v.add(t);
  }
  return v;
}

int Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  if (tokens.size() < reserved().size() ||
      !std::equal(reserved().begin(), reserved().end(), tokens.begin())) {
    throw ConfigError("vocabulary must start with the reserved tokens");
  }
  Vocabulary v;
  for (std::size_t i = reserved().size(); i < tokens.size(); ++i) {
    if (v.contains(tokens[i])) throw ConfigError("duplicate vocabulary token '" + tokens[i] + "'");
    v.add(tokens[i]);
  }
  return v;
}

void to_json(nlohmann::json& j, const Vocabulary& v) { j = v.tokens(); }

void from_json(const nlohmann::json& j, Vocabulary& v) {
  v = Vocabulary::from_tokens(j.get<std::vector<std::string>>());
}

}  // namespace mwp
