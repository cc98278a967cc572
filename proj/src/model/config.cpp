#include "mwp/model/config.hpp"

#include <nlohmann/json.hpp>

namespace mwp {

const char* to_string(Direction d) { return d == Direction::kL2R ? "l2r" : "r2l"; }

ModelConfig ModelConfig::desk(std::size_t src_vocab, std::size_t tgt_vocab) {
  ModelConfig c;
  c.src_vocab = src_vocab;
  c.tgt_vocab = tgt_vocab;
  return c;
}

ModelConfig ModelConfig::large(std::size_t src_vocab, std::size_t tgt_vocab) {
  ModelConfig c;
  c.src_vocab = src_vocab;
  c.tgt_vocab = tgt_vocab;
  c.embed_dim = 300;
  c.model_dim = 512;
  c.layers = 3;
  c.heads = 8;
  c.ff_dim = 2048;
  c.max_positions = 256;
  return c;
}

void ModelConfig::validate() const {
  if (src_vocab <= static_cast<std::size_t>(kNumSpecialTokens) ||
      tgt_vocab <= static_cast<std::size_t>(kEos)) {
    throw ConfigError("vocabulary sizes must cover the reserved tokens");
  }
  if (embed_dim == 0 || model_dim == 0 || ff_dim == 0) throw ConfigError("dimensions must be positive");
  if (model_dim % 2 != 0) throw ConfigError("model_dim must be even for sinusoidal positions");
  if (heads == 0 || model_dim % heads != 0) throw ConfigError("model_dim must be divisible by heads");
  if (layers < 1) throw ConfigError("layers must be at least 1");
  if (max_positions < 2) throw ConfigError("max_positions must be at least 2");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"src_vocab", c.src_vocab},
                     {"tgt_vocab", c.tgt_vocab},
                     {"embed_dim", c.embed_dim},
                     {"model_dim", c.model_dim},
                     {"layers", c.layers},
                     {"heads", c.heads},
                     {"ff_dim", c.ff_dim},
                     {"max_positions", c.max_positions},
                     {"dropout", c.dropout},
                     {"separate_target_embeddings", c.separate_target_embeddings}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.src_vocab = j.value("src_vocab", d.src_vocab);
  c.tgt_vocab = j.value("tgt_vocab", d.tgt_vocab);
  c.embed_dim = j.value("embed_dim", d.embed_dim);
  c.model_dim = j.value("model_dim", d.model_dim);
  c.layers = j.value("layers", d.layers);
  c.heads = j.value("heads", d.heads);
  c.ff_dim = j.value("ff_dim", d.ff_dim);
  c.max_positions = j.value("max_positions", d.max_positions);
  c.dropout = j.value("dropout", d.dropout);
  c.separate_target_embeddings = j.value("separate_target_embeddings", d.separate_target_embeddings);
}

}  // namespace mwp
