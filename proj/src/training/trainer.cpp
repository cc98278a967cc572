#include "mwp/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "mwp/equations/reward.hpp"
#include "mwp/numerics/ops.hpp"

namespace mwp {

using nlohmann::json;

void TrainConfig::validate() const {
  if (preset != "desk" && preset != "large") throw ConfigError("unknown preset '" + preset + "'");
  if (batch_size == 0 || rl_batch_size == 0) throw ConfigError("batch sizes must be positive");
  if (!(lr >= 0.0) || !(rl_lr >= 0.0)) throw ConfigError("learning rates must be non-negative");
  if (eval_beam == 0 || rl_beam == 0) throw ConfigError("beam sizes must be positive");
  if (max_decode_len == 0) throw ConfigError("max_decode_len must be positive");
  if (clip_norm < 0.0 || rl_clip_norm < 0.0) throw ConfigError("clip norms must be non-negative");
}

ModelConfig TrainConfig::model_config(std::size_t src_vocab, std::size_t tgt_vocab) const {
  ModelConfig c = model;
  c.src_vocab = src_vocab;
  c.tgt_vocab = tgt_vocab;
  c.validate();
  return c;
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"preset", c.preset},
           {"model", c.model},
           {"seed", c.seed},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"lr", c.lr},
           {"clip_norm", c.clip_norm},
           {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
           {"eval_every", c.eval_every},
           {"eval_beam", c.eval_beam},
           {"max_decode_len", c.max_decode_len},
           {"stop_at_train_accuracy", c.stop_at_train_accuracy},
           {"rl_epochs", c.rl_epochs},
           {"rl_lr", c.rl_lr},
           {"rl_beam", c.rl_beam},
           {"rl_batch_size", c.rl_batch_size},
           {"rl_clip_norm", c.rl_clip_norm}};
}

void from_json(const json& j, TrainConfig& c) {
  TrainConfig d;
  d.preset = j.value("preset", d.preset);
  d.model = d.preset == "large" ? ModelConfig::large(0, 0) : ModelConfig::desk(0, 0);
  if (auto it = j.find("model"); it != j.end()) {
    json merged = d.model;
    merged.update(*it);
    d.model = merged.get<ModelConfig>();
  }
  d.seed = j.value("seed", d.seed);
  d.epochs = j.value("epochs", d.epochs);
  d.batch_size = j.value("batch_size", d.batch_size);
  d.lr = j.value("lr", d.lr);
  d.clip_norm = j.value("clip_norm", d.clip_norm);
  if (auto it = j.find("adam"); it != j.end()) {
    d.adam.beta1 = it->value("beta1", d.adam.beta1);
    d.adam.beta2 = it->value("beta2", d.adam.beta2);
    d.adam.eps = it->value("eps", d.adam.eps);
  }
  d.eval_every = j.value("eval_every", d.eval_every);
  d.eval_beam = j.value("eval_beam", d.eval_beam);
  d.max_decode_len = j.value("max_decode_len", d.max_decode_len);
  d.stop_at_train_accuracy = j.value("stop_at_train_accuracy", d.stop_at_train_accuracy);
  d.rl_epochs = j.value("rl_epochs", d.rl_epochs);
  d.rl_lr = j.value("rl_lr", d.rl_lr);
  d.rl_beam = j.value("rl_beam", d.rl_beam);
  d.rl_batch_size = j.value("rl_batch_size", d.rl_batch_size);
  d.rl_clip_norm = j.value("rl_clip_norm", d.rl_clip_norm);
  d.validate();
  c = d;
}

json to_json(const MetricsRecord& r) {
  json j{{"epoch", r.epoch},
         {"phase", r.phase},
         {"split", r.split},
         {"loss_l2r", r.loss_l2r},
         {"loss_r2l", r.loss_r2l},
         {"answer_accuracy_l2r", r.answer_accuracy_l2r},
         {"answer_accuracy_r2l", r.answer_accuracy_r2l},
         {"answer_accuracy_vote", r.answer_accuracy_vote}};
  j["mean_reward"] = r.mean_reward ? json(*r.mean_reward) : json(nullptr);
  return j;
}

JointLossValue mle_step(DualDecoderTransformer& model, Adam& opt, const Batch& batch,
                        std::mt19937_64& rng, double clip_norm) {
  model.zero_grad();
  JointLossValue out;
  try {
    Graph g;
    Forward fwd(g, model, /*training=*/true, &rng);
    JointLoss loss = joint_loss(fwd, batch);
    out = {loss.total.value().item(), loss.l2r.value().item(), loss.r2l.value().item()};
    if (!std::isfinite(out.total)) throw NumericError("loss is not finite");
    g.backward(loss.total);
  } catch (const NumericError& e) {
    throw DivergenceError(std::string("training diverged: ") + e.what());
  }
  const double norm = clip_norm > 0.0 ? clip_grad_norm(model.parameters(), clip_norm)
                                      : grad_norm(model.parameters());
  if (!std::isfinite(norm)) throw DivergenceError("training diverged: gradient is not finite");
  opt.step(model.parameters());
  return out;
}

double mean_baseline(const std::vector<int>& rewards) {
  if (rewards.empty()) throw ContractError("baseline of an empty reward list");
  const double sum = std::accumulate(rewards.begin(), rewards.end(), 0.0);
  return sum / static_cast<double>(rewards.size());
}

std::vector<RewardSample> sample_hypotheses(const DualDecoderTransformer& model,
                                            const Example& example, const Vocabulary& target_vocab,
                                            std::size_t beam_size, std::size_t max_len) {
  BeamOptions options;
  options.beam_size = beam_size;
  options.max_len = max_len;
  const EncodedSource enc = encode_source(model, example.source);
  std::vector<RewardSample> out;
  for (Direction dir : {Direction::kL2R, Direction::kR2L}) {
    for (const Hypothesis& h : beam_search(model, dir, enc, options)) {
      if (!h.finished) continue;
      out.push_back({dir, h.tokens,
                     reward(target_vocab.decode(h.canonical()), example.mapping, example.answers)});
    }
  }
  return out;
}

PolicyGradient accumulate_policy_gradient(DualDecoderTransformer& model, const Example& example,
                                          const std::vector<RewardSample>& samples) {
  std::vector<int> rewards;
  for (const auto& s : samples) rewards.push_back(s.reward);
  PolicyGradient out;
  out.baseline = mean_baseline(rewards);
  out.mean_reward = out.baseline;
  const double n = static_cast<double>(samples.size());

  Graph g;
  Forward fwd(g, model);
  const std::vector<std::uint8_t> mask(example.source.size(), 1);
  Var memory = fwd.encode(example.source, mask);
  Var total;
  for (const RewardSample& s : samples) {
    std::vector<int> inputs{s.direction == Direction::kL2R ? kBos : kBosR};
    inputs.insert(inputs.end(), s.reading.begin(), s.reading.end() - 1);
    Var logits = fwd.decode(s.direction, inputs, memory, mask);
    Var term = scale(cross_entropy(logits, s.reading, kIgnoreIndex),
                     (static_cast<double>(s.reward) - out.baseline) / n);
    total = total.valid() ? add(total, term) : term;
  }
  out.loss = total.value().item();
  g.backward(total);
  return out;
}

ReinforceStats reinforce_step(DualDecoderTransformer& model, Adam& opt,
                              const std::vector<const Example*>& batch,
                              const Vocabulary& target_vocab, const TrainConfig& config) {
  model.zero_grad();
  ReinforceStats stats;
  double reward_sum = 0.0;
  for (const Example* ex : batch) {
    const auto samples =
        sample_hypotheses(model, *ex, target_vocab, config.rl_beam, config.max_decode_len);
    if (samples.empty()) continue;
    ++stats.examples;
    const bool uniform = std::all_of(samples.begin(), samples.end(), [&](const RewardSample& s) {
      return s.reward == samples.front().reward;
    });
    if (uniform) {
      reward_sum += samples.front().reward;
      continue;
    }
    try {
      reward_sum += accumulate_policy_gradient(model, *ex, samples).mean_reward;
    } catch (const NumericError& e) {
      throw DivergenceError(std::string("reward training diverged: ") + e.what());
    }
    ++stats.updates;
  }
  if (stats.examples > 0) stats.mean_reward = reward_sum / static_cast<double>(stats.examples);
  if (stats.updates == 0) return stats;
  const double norm = config.rl_clip_norm > 0.0
                          ? clip_grad_norm(model.parameters(), config.rl_clip_norm)
                          : grad_norm(model.parameters());
  if (!std::isfinite(norm)) throw DivergenceError("reward training diverged: gradient is not finite");
  opt.step(model.parameters());
  stats.stepped = true;
  return stats;
}

namespace {

EvalOptions eval_options(const TrainConfig& c) {
  EvalOptions o;
  o.beam_size = c.eval_beam;
  o.max_len = c.max_decode_len;
  return o;
}

MetricsRecord record(std::size_t epoch, const char* phase, const char* split,
                     const EvalReport& r, std::optional<double> mean_reward) {
  MetricsRecord m;
  m.epoch = epoch;
  m.phase = phase;
  m.split = split;
  m.loss_l2r = r.loss_l2r;
  m.loss_r2l = r.loss_r2l;
  m.answer_accuracy_l2r = r.accuracy_l2r();
  m.answer_accuracy_r2l = r.accuracy_r2l();
  m.answer_accuracy_vote = r.accuracy_vote();
  m.mean_reward = mean_reward;
  return m;
}

bool due(std::size_t epoch, std::size_t last, std::size_t every) {
  return epoch == last || (every > 0 && epoch % every == 0);
}

void report(TrainSummary& summary, const DualDecoderTransformer& model,
            const std::vector<Example>& train, const std::vector<Example>& dev,
            const Vocabulary& vocab, const TrainConfig& config, std::size_t epoch,
            const char* phase, std::optional<double> mean_reward, const MetricsSink& sink) {
  summary.last_train = evaluate(model, train, vocab, eval_options(config));
  if (sink) sink(record(epoch, phase, "train", *summary.last_train, mean_reward));
  if (!dev.empty()) {
    summary.last_dev = evaluate(model, dev, vocab, eval_options(config));
    if (sink) sink(record(epoch, phase, "dev", *summary.last_dev, std::nullopt));
  }
}

}  // namespace

TrainSummary train_mle(DualDecoderTransformer& model, const std::vector<Example>& train,
                       const std::vector<Example>& dev, const Vocabulary& target_vocab,
                       const TrainConfig& config, const MetricsSink& sink) {
  config.validate();
  std::vector<const Example*> pool;
  for (const Example& ex : train) {
    if (ex.alignable()) pool.push_back(&ex);
  }
  if (pool.empty()) throw ConfigError("no alignable training examples");

  AdamOptions adam = config.adam;
  adam.lr = config.lr;
  Adam opt(adam);
  std::mt19937_64 rng(config.seed);
  TrainSummary summary;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t i = 0; i < pool.size(); i += config.batch_size) {
      std::vector<std::vector<int>> src, tgt;
      for (std::size_t k = i; k < std::min(pool.size(), i + config.batch_size); ++k) {
        src.push_back(pool[k]->source);
        tgt.push_back(pool[k]->target);
      }
      mle_step(model, opt, make_batch(src, tgt), rng, config.clip_norm);
    }
    summary.epochs = epoch;
    const bool early_check = config.stop_at_train_accuracy > 0.0;
    if (due(epoch, config.epochs, config.eval_every)) {
      report(summary, model, train, dev, target_vocab, config, epoch, "mle", std::nullopt, sink);
      if (early_check && summary.last_train->accuracy_vote() >= config.stop_at_train_accuracy) {
        break;
      }
    }
  }
  return summary;
}

TrainSummary train_rl(DualDecoderTransformer& model, const std::vector<Example>& train,
                      const std::vector<Example>& dev, const Vocabulary& target_vocab,
                      const TrainConfig& config, const MetricsSink& sink) {
  config.validate();
  std::vector<const Example*> pool;
  for (const Example& ex : train) {
    if (ex.alignable()) pool.push_back(&ex);
  }
  if (pool.empty()) throw ConfigError("no alignable training examples");

  AdamOptions adam = config.adam;
  adam.lr = config.rl_lr;
  Adam opt(adam);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  TrainSummary summary;
  for (std::size_t epoch = 1; epoch <= config.rl_epochs; ++epoch) {
    std::shuffle(pool.begin(), pool.end(), rng);
    double reward_sum = 0.0;
    std::size_t scored = 0;
    for (std::size_t i = 0; i < pool.size(); i += config.rl_batch_size) {
      const std::vector<const Example*> batch(
          pool.begin() + static_cast<std::ptrdiff_t>(i),
          pool.begin() + static_cast<std::ptrdiff_t>(std::min(pool.size(), i + config.rl_batch_size)));
      const ReinforceStats stats = reinforce_step(model, opt, batch, target_vocab, config);
      reward_sum += stats.mean_reward * static_cast<double>(stats.examples);
      scored += stats.examples;
    }
    summary.epochs = epoch;
    if (due(epoch, config.rl_epochs, config.eval_every)) {
      const std::optional<double> mean_reward =
          scored > 0 ? std::optional<double>(reward_sum / static_cast<double>(scored))
                     : std::nullopt;
      report(summary, model, train, dev, target_vocab, config, epoch, "rl", mean_reward, sink);
    }
  }
  return summary;
}

}  // namespace mwp
