#pragma once

#include <cstddef>
#include <vector>

#include "mwp/corpus/dataset.hpp"
#include "mwp/corpus/vocabulary.hpp"
#include "mwp/decoding/beam_search.hpp"
#include "mwp/model/transformer.hpp"

namespace mwp {

struct EvalOptions {
  std::size_t beam_size = 10;
  std::size_t max_len = 40;
  // Also compute teacher-forced losses on the alignable examples.
  bool losses = true;
};

struct Prediction {
  std::vector<int> l2r;   // canonical order
  std::vector<int> r2l;   // canonical order
  std::vector<int> vote;
  Direction winner = Direction::kL2R;
  bool correct_l2r = false;
  bool correct_r2l = false;
  bool correct_vote = false;
};

struct EvalReport {
  std::size_t count = 0;
  std::size_t correct_l2r = 0;
  std::size_t correct_r2l = 0;
  std::size_t correct_vote = 0;
  // Mean summed token NLL per alignable example; 0 when there are none.
  double loss_l2r = 0.0;
  double loss_r2l = 0.0;
  std::vector<Prediction> predictions;

  double accuracy_l2r() const { return ratio(correct_l2r); }
  double accuracy_r2l() const { return ratio(correct_r2l); }
  double accuracy_vote() const { return ratio(correct_vote); }

 private:
  double ratio(std::size_t k) const {
    return count == 0 ? 0.0 : static_cast<double>(k) / static_cast<double>(count);
  }
};

// Decodes every example with both decoders and the vote and checks the
// answers. Unalignable examples are counted and always scored wrong.
EvalReport evaluate(const DualDecoderTransformer& model, const std::vector<Example>& examples,
                    const Vocabulary& target_vocab, const EvalOptions& options = {});

}  // namespace mwp
