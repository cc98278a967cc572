#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace mwp {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Reserved token ids shared by source and target vocabularies.
enum SpecialToken : int {
  kPad = 0,
  kBos = 1,   // begin sentinel of the left-to-right decoder
  kBosR = 2,  // begin sentinel of the right-to-left decoder
  kEos = 3,
  kUnk = 4,
};
inline constexpr int kNumSpecialTokens = 5;
// Target positions carrying this id are excluded from the loss.
inline constexpr int kIgnoreIndex = -1;

enum class Direction { kL2R, kR2L };

const char* to_string(Direction d);

struct ModelConfig {
  std::size_t src_vocab = 0;
  std::size_t tgt_vocab = 0;
  std::size_t embed_dim = 32;
  std::size_t model_dim = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ff_dim = 128;
  std::size_t max_positions = 128;
  double dropout = 0.1;
  // One target embedding table per decoder instead of a shared one.
  bool separate_target_embeddings = false;

  // Desk-scale defaults.
  static ModelConfig desk(std::size_t src_vocab, std::size_t tgt_vocab);
  // 3 layers, 300-d embeddings projected to 512, 8 heads, 2048 feed-forward.
  static ModelConfig large(std::size_t src_vocab, std::size_t tgt_vocab);

  void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace mwp
