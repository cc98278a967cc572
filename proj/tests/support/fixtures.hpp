#pragma once

#include <random>
#include <vector>

#include "mwp/model/config.hpp"
#include "mwp/model/transformer.hpp"

namespace mwp::testing {

// Small enough for exhaustive finite differences.
inline ModelConfig tiny_config(std::size_t src_vocab = 9, std::size_t tgt_vocab = 8,
                               std::size_t layers = 1) {
  ModelConfig c;
  c.src_vocab = src_vocab;
  c.tgt_vocab = tgt_vocab;
  c.embed_dim = 6;
  c.model_dim = 8;
  c.layers = layers;
  c.heads = 2;
  c.ff_dim = 12;
  c.max_positions = 32;
  c.dropout = 0.0;
  return c;
}

// Random token rows with ids in [first, vocab).
inline std::vector<std::vector<int>> random_rows(std::mt19937_64& rng, std::size_t count,
                                                 std::size_t min_len, std::size_t max_len,
                                                 int first, int vocab) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<int> tok(first, vocab - 1);
  std::vector<std::vector<int>> rows(count);
  for (auto& r : rows) {
    r.resize(len(rng));
    for (int& t : r) t = tok(rng);
  }
  return rows;
}

inline Batch random_batch(std::mt19937_64& rng, const ModelConfig& c, std::size_t count) {
  return make_batch(random_rows(rng, count, 2, 6, kNumSpecialTokens, static_cast<int>(c.src_vocab)),
                    random_rows(rng, count, 1, 5, kNumSpecialTokens, static_cast<int>(c.tgt_vocab)));
}

}  // namespace mwp::testing
