#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "mwp/decoding/beam_search.hpp"
#include "mwp/model/transformer.hpp"
#include "mwp/numerics/ops.hpp"

namespace mwp::testing {

// Log-probability of every next token after `prefix` (reading order, without
// the begin sentinel), from a fresh teacher-forced pass.
inline std::vector<double> full_pass_next(const DualDecoderTransformer& model, Direction dir,
                                          std::span<const int> source,
                                          const std::vector<int>& prefix) {
  Graph g(false);
  Forward fwd(g, model);
  std::vector<std::uint8_t> mask(source.size(), 1);
  Var memory = fwd.encode(source, mask);
  std::vector<int> inputs{dir == Direction::kL2R ? kBos : kBosR};
  inputs.insert(inputs.end(), prefix.begin(), prefix.end());
  Tensor logp = log_softmax_rows(fwd.decode(dir, inputs, memory, mask).value());
  auto last = logp.row(logp.rows() - 1);
  return {last.begin(), last.end()};
}

// Score of a reading-order sequence as a sum of per-step full-pass
// log-probabilities.
inline double full_pass_score(const DualDecoderTransformer& model, Direction dir,
                              std::span<const int> source, const std::vector<int>& reading) {
  double s = 0.0;
  std::vector<int> prefix;
  for (int t : reading) {
    s += full_pass_next(model, dir, source, prefix)[static_cast<std::size_t>(t)];
    prefix.push_back(t);
  }
  return s;
}

// Every sequence beam search could return: EOS-terminated sequences of length
// <= max_len and unterminated ones of exactly max_len, over `allowed` tokens.
inline std::vector<Hypothesis> exhaustive(const DualDecoderTransformer& model, Direction dir,
                                          std::span<const int> source,
                                          const std::vector<int>& allowed, std::size_t max_len) {
  std::vector<Hypothesis> out;
  struct Node {
    std::vector<int> tokens;
    double score;
  };
  std::vector<Node> frontier{{{}, 0.0}};
  for (std::size_t step = 1; step <= max_len; ++step) {
    std::vector<Node> next;
    for (const Node& n : frontier) {
      auto logp = full_pass_next(model, dir, source, n.tokens);
      for (int t : allowed) {
        Node child{n.tokens, n.score + logp[static_cast<std::size_t>(t)]};
        child.tokens.push_back(t);
        if (t == kEos) {
          out.push_back({child.tokens, child.score, dir, true});
        } else if (step == max_len) {
          out.push_back({child.tokens, child.score, dir, false});
        } else {
          next.push_back(std::move(child));
        }
      }
    }
    frontier = std::move(next);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Hypothesis& a, const Hypothesis& b) { return a.score > b.score; });
  return out;
}

// Greedy decoding from full passes, restricted to `allowed`.
inline Hypothesis greedy(const DualDecoderTransformer& model, Direction dir,
                         std::span<const int> source, const std::vector<int>& allowed,
                         std::size_t max_len) {
  Hypothesis h;
  h.direction = dir;
  for (std::size_t step = 0; step < max_len; ++step) {
    auto logp = full_pass_next(model, dir, source, h.tokens);
    int best = allowed.front();
    for (int t : allowed) {
      if (logp[static_cast<std::size_t>(t)] > logp[static_cast<std::size_t>(best)]) best = t;
    }
    h.tokens.push_back(best);
    h.score += logp[static_cast<std::size_t>(best)];
    if (best == kEos) {
      h.finished = true;
      break;
    }
  }
  return h;
}

// Beam search from full passes that never stops early: every step runs until
// max_len and every finished hypothesis is kept. Returns the best k, with live
// ones appended as unfinished only when fewer than k finished.
inline std::vector<Hypothesis> patient_beam(const DualDecoderTransformer& model, Direction dir,
                                            std::span<const int> source,
                                            const std::vector<int>& allowed, std::size_t k,
                                            std::size_t max_len) {
  std::vector<Hypothesis> pool;
  std::vector<Hypothesis> live{{{}, 0.0, dir, false}};
  for (std::size_t step = 1; step <= max_len && !live.empty(); ++step) {
    std::vector<Hypothesis> cands;
    for (const Hypothesis& h : live) {
      auto logp = full_pass_next(model, dir, source, h.tokens);
      for (int t : allowed) {
        Hypothesis c{h.tokens, h.score + logp[static_cast<std::size_t>(t)], dir, t == kEos};
        c.tokens.push_back(t);
        cands.push_back(std::move(c));
      }
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Hypothesis& a, const Hypothesis& b) { return a.score > b.score; });
    if (cands.size() > k) cands.resize(k);
    live.clear();
    for (auto& c : cands) (c.finished ? pool : live).push_back(std::move(c));
  }
  if (pool.size() < k) pool.insert(pool.end(), live.begin(), live.end());
  std::stable_sort(pool.begin(), pool.end(),
                   [](const Hypothesis& a, const Hypothesis& b) { return a.score > b.score; });
  if (pool.size() > k) pool.resize(k);
  return pool;
}

}  // namespace mwp::testing
