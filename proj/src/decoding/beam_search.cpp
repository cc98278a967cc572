#include "mwp/decoding/beam_search.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "mwp/numerics/ops.hpp"

namespace mwp {

std::vector<int> Hypothesis::canonical() const {
  std::vector<int> out = tokens;
  if (!out.empty() && out.back() == kEos) out.pop_back();
  if (direction == Direction::kR2L) std::reverse(out.begin(), out.end());
  return out;
}

namespace {

struct Live {
  std::vector<int> tokens;
  double score = 0.0;
  DecoderState state;
  std::vector<double> next_logp;
};

double rank_key(double score, std::size_t length, bool normalize) {
  return normalize ? score / static_cast<double>(std::max<std::size_t>(length, 1)) : score;
}

}  // namespace

std::vector<Hypothesis> beam_search(const DualDecoderTransformer& model, Direction dir,
                                    const EncodedSource& source, const BeamOptions& options) {
  if (options.beam_size < 1) throw ContractError("beam_search: beam_size must be at least 1");
  if (options.max_len < 1) throw ContractError("beam_search: max_len must be at least 1");
  const IncrementalDecoder decoder(model, dir, source);
  const std::size_t vocab = model.config().tgt_vocab;
  std::vector<bool> allowed(vocab, true);
  for (int b : options.banned) {
    if (b >= 0 && static_cast<std::size_t>(b) < vocab) allowed[static_cast<std::size_t>(b)] = false;
  }

  std::vector<Live> live(1);
  live[0].state = decoder.initial_state();
  live[0].next_logp = decoder.step(live[0].state, decoder.begin_token());
  std::vector<Hypothesis> pool;

  struct Cand {
    std::size_t parent;
    int token;
    double score;
    double key;
  };
  for (std::size_t step = 1; step <= options.max_len && !live.empty(); ++step) {
    std::vector<Cand> cands;
    cands.reserve(live.size() * vocab);
    for (std::size_t h = 0; h < live.size(); ++h) {
      for (std::size_t t = 0; t < vocab; ++t) {
        if (!allowed[t]) continue;
        const double s = live[h].score + live[h].next_logp[t];
        cands.push_back({h, static_cast<int>(t), s, rank_key(s, step, options.length_normalize)});
      }
    }
    const std::size_t keep = std::min(options.beam_size, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Cand& a, const Cand& b) {
                        if (a.key != b.key) return a.key > b.key;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });
    std::vector<Live> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const Cand& c = cands[k];
      const Live& parent = live[c.parent];
      std::vector<int> tokens = parent.tokens;
      tokens.push_back(c.token);
      if (c.token == kEos) {
        pool.push_back({std::move(tokens), c.score, dir, true});
        continue;
      }
      Live child;
      child.tokens = std::move(tokens);
      child.score = c.score;
      child.state = parent.state;
      if (step < options.max_len) child.next_logp = decoder.step(child.state, c.token);
      next.push_back(std::move(child));
    }
    live = std::move(next);
    if (pool.size() < options.beam_size || live.empty()) continue;
    // Raw scores only fall as a hypothesis grows, so once the pool's k-th best
    // beats every live prefix nothing live can enter the result. Normalised
    // keys have no such bound; there a full pool ends the search.
    if (options.length_normalize) break;
    std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(options.beam_size - 1),
                     pool.end(),
                     [](const Hypothesis& a, const Hypothesis& b) { return a.score > b.score; });
    const double kth = pool[options.beam_size - 1].score;
    double best_live = live.front().score;
    for (const Live& l : live) best_live = std::max(best_live, l.score);
    if (best_live <= kth) break;
  }
  if (pool.size() < options.beam_size) {
    for (Live& l : live) pool.push_back({std::move(l.tokens), l.score, dir, false});
  }
  std::stable_sort(pool.begin(), pool.end(), [&](const Hypothesis& a, const Hypothesis& b) {
    return rank_key(a.score, a.tokens.size(), options.length_normalize) >
           rank_key(b.score, b.tokens.size(), options.length_normalize);
  });
  if (pool.size() > options.beam_size) pool.resize(options.beam_size);
  return pool;
}

std::vector<Hypothesis> beam_search(const DualDecoderTransformer& model, Direction dir,
                                    std::span<const int> source, const BeamOptions& options) {
  const EncodedSource encoded = encode_source(model, source);
  return beam_search(model, dir, encoded, options);
}

const Hypothesis& top_hypothesis(const std::vector<Hypothesis>& beam) {
  if (beam.empty()) throw ContractError("top_hypothesis: empty beam");
  for (const Hypothesis& h : beam) {
    if (h.finished) return h;
  }
  return beam.front();
}

VoteResult vote(const Hypothesis& l2r, const Hypothesis& r2l) {
  const Hypothesis& win = r2l.score > l2r.score ? r2l : l2r;
  return {win.canonical(), win.score, win.direction};
}

double sequence_log_prob(const DualDecoderTransformer& model, Direction dir,
                         std::span<const int> source, std::span<const int> reading_order) {
  if (reading_order.empty()) throw ContractError("sequence_log_prob: empty sequence");
  Graph g(false);
  Forward fwd(g, model);
  std::vector<std::uint8_t> mask(source.size(), 1);
  Var memory = fwd.encode(source, mask);
  std::vector<int> inputs;
  inputs.push_back(dir == Direction::kL2R ? kBos : kBosR);
  inputs.insert(inputs.end(), reading_order.begin(), reading_order.end() - 1);
  Var logits = fwd.decode(dir, inputs, memory, mask);
  std::vector<int> targets(reading_order.begin(), reading_order.end());
  return -cross_entropy(logits, targets, kIgnoreIndex).value().item();
}

}  // namespace mwp
