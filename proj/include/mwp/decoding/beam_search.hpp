#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mwp/model/transformer.hpp"

namespace mwp {

struct Hypothesis {
  std::vector<int> tokens;  // reading order of its decoder, ending in kEos when finished
  double score = 0.0;       // sum of token log-probabilities, no length normalisation
  Direction direction = Direction::kL2R;
  bool finished = false;    // false: cut off at max_len (force-finished)

  // Tokens without the end sentinel, in left-to-right order.
  std::vector<int> canonical() const;
};

struct BeamOptions {
  std::size_t beam_size = 10;
  std::size_t max_len = 64;
  // Tokens never proposed during expansion. Scores still use the full softmax.
  std::vector<int> banned = {kPad, kBos, kBosR, kUnk};
  // Rank by score / length instead of the raw sum.
  bool length_normalize = false;
};

// Standard beam search: every live hypothesis is expanded over the vocabulary
// and the best beam_size candidates are kept; candidates ending in kEos
// retire to the result pool. Stops once the pool holds beam_size hypotheses
// that no live prefix can overtake, or after max_len tokens, at which point
// live ones are force-finished if the pool is short.
// Returns at most beam_size hypotheses, best first.
std::vector<Hypothesis> beam_search(const DualDecoderTransformer& model, Direction dir,
                                    const EncodedSource& source, const BeamOptions& options);
std::vector<Hypothesis> beam_search(const DualDecoderTransformer& model, Direction dir,
                                    std::span<const int> source, const BeamOptions& options);

// Best hypothesis, preferring ones that ended with kEos.
const Hypothesis& top_hypothesis(const std::vector<Hypothesis>& beam);

struct VoteResult {
  std::vector<int> tokens;  // canonical left-to-right order
  double score = 0.0;
  Direction winner = Direction::kL2R;
};

// Picks the higher-scoring of the two top hypotheses; ties go to L2R.
VoteResult vote(const Hypothesis& l2r, const Hypothesis& r2l);

// Log-probability of `reading_order` (ending in kEos) under one decoder,
// computed by a single teacher-forced pass.
double sequence_log_prob(const DualDecoderTransformer& model, Direction dir,
                         std::span<const int> source, std::span<const int> reading_order);

}  // namespace mwp
