#include "mwp/corpus/evaluate.hpp"

#include "mwp/equations/reward.hpp"

namespace mwp {

EvalReport evaluate(const DualDecoderTransformer& model, const std::vector<Example>& examples,
                    const Vocabulary& target_vocab, const EvalOptions& options) {
  BeamOptions beam;
  beam.beam_size = options.beam_size;
  beam.max_len = options.max_len;

  EvalReport report;
  report.count = examples.size();
  std::size_t alignable = 0;
  for (const Example& ex : examples) {
    Prediction pred;
    if (ex.alignable()) {
      const EncodedSource enc = encode_source(model, ex.source);
      const Hypothesis l2r = top_hypothesis(beam_search(model, Direction::kL2R, enc, beam));
      const Hypothesis r2l = top_hypothesis(beam_search(model, Direction::kR2L, enc, beam));
      const VoteResult v = vote(l2r, r2l);
      pred.l2r = l2r.canonical();
      pred.r2l = r2l.canonical();
      pred.vote = v.tokens;
      pred.winner = v.winner;
      auto correct = [&](const std::vector<int>& ids) {
        return reward(target_vocab.decode(ids), ex.mapping, ex.answers) == 1;
      };
      pred.correct_l2r = correct(pred.l2r);
      pred.correct_r2l = correct(pred.r2l);
      pred.correct_vote = correct(pred.vote);
      report.correct_l2r += pred.correct_l2r ? 1 : 0;
      report.correct_r2l += pred.correct_r2l ? 1 : 0;
      report.correct_vote += pred.correct_vote ? 1 : 0;

      if (options.losses) {
        const JointLossValue loss = joint_loss_value(model, make_batch({ex.source}, {ex.target}));
        report.loss_l2r += loss.l2r;
        report.loss_r2l += loss.r2l;
        ++alignable;
      }
    }
    report.predictions.push_back(std::move(pred));
  }
  if (alignable > 0) {
    report.loss_l2r /= static_cast<double>(alignable);
    report.loss_r2l /= static_cast<double>(alignable);
  }
  return report;
}

}  // namespace mwp
