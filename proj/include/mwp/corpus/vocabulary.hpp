#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mwp {

// Token <-> id table. Ids 0..4 are always <pad>, <bos>, <bos_r>, <eos>, <unk>.
class Vocabulary {
 public:
  Vocabulary();

  // Closed equation vocabulary: operators, parentheses, '=', ';', x/y/z,
  // whitelisted constants and every M_i/F_i/N_i symbol.
  static Vocabulary target();
  // Every token seen in `sentences` plus all number symbols, in order of
  // first appearance.
  static Vocabulary build(const std::vector<std::vector<std::string>>& sentences);

  int add(const std::string& token);
  // kUnk for unknown tokens.
  int id(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(std::span<const int> ids) const;

  const std::vector<std::string>& tokens() const { return tokens_; }
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

void to_json(nlohmann::json& j, const Vocabulary& v);
void from_json(const nlohmann::json& j, Vocabulary& v);

}  // namespace mwp
