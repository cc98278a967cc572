#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mwp/corpus/dataset.hpp"
#include "mwp/corpus/evaluate.hpp"
#include "mwp/corpus/vocabulary.hpp"
#include "mwp/decoding/beam_search.hpp"
#include "mwp/model/transformer.hpp"
#include "mwp/training/optimizer.hpp"

namespace mwp {

// Raised when a loss or gradient stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::string preset = "desk";  // "desk" or "large": model dimensions
  ModelConfig model;            // vocabulary sizes are filled in from the data
  std::uint64_t seed = 1;

  // Maximum likelihood phase.
  std::size_t epochs = 300;
  std::size_t batch_size = 8;
  double lr = 1e-3;
  double clip_norm = 0.0;  // 0 disables clipping
  AdamOptions adam;

  // Metrics: evaluate every `eval_every` epochs (0: only after the last one).
  std::size_t eval_every = 0;
  std::size_t eval_beam = 10;
  std::size_t max_decode_len = 40;
  // Stop the MLE phase once train vote accuracy reaches this (0 disables).
  double stop_at_train_accuracy = 0.0;

  // Reward phase.
  std::size_t rl_epochs = 0;
  double rl_lr = 1e-5;
  std::size_t rl_beam = 6;
  std::size_t rl_batch_size = 4;
  double rl_clip_norm = 1.0;

  void validate() const;
  // Model dimensions for the chosen preset and vocabulary sizes.
  ModelConfig model_config(std::size_t src_vocab, std::size_t tgt_vocab) const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct MetricsRecord {
  std::size_t epoch = 0;
  std::string phase;  // "mle" or "rl"
  std::string split;  // "train" or "dev"
  double loss_l2r = 0.0;
  double loss_r2l = 0.0;
  double answer_accuracy_l2r = 0.0;
  double answer_accuracy_r2l = 0.0;
  double answer_accuracy_vote = 0.0;
  std::optional<double> mean_reward;
};
nlohmann::json to_json(const MetricsRecord& r);

using MetricsSink = std::function<void(const MetricsRecord&)>;

// One optimizer update on the joint teacher-forced loss of `batch`. Returns
// the loss before the update. Throws DivergenceError on a non-finite loss.
JointLossValue mle_step(DualDecoderTransformer& model, Adam& opt, const Batch& batch,
                        std::mt19937_64& rng, double clip_norm = 0.0);

// Reward baseline: the mean. Throws ContractError for an empty list.
double mean_baseline(const std::vector<int>& rewards);

// A finished beam hypothesis with its reward.
struct RewardSample {
  Direction direction = Direction::kL2R;
  std::vector<int> reading;  // decoder reading order, ending in kEos
  int reward = 0;
};

// Beam search in both directions; every hypothesis that ended with kEos is
// scored. Cut-off hypotheses are left out.
std::vector<RewardSample> sample_hypotheses(const DualDecoderTransformer& model,
                                            const Example& example, const Vocabulary& target_vocab,
                                            std::size_t beam_size, std::size_t max_len);

struct PolicyGradient {
  double baseline = 0.0;
  double mean_reward = 0.0;
  double loss = 0.0;  // sum_n (r_n - baseline) / N * NLL_n
};

// Adds the gradient of sum_n (r_n - b) / N * NLL_n to Parameter::grad, where
// NLL_n is the negative log-likelihood of sample n under its own decoder.
// Requires at least one sample.
PolicyGradient accumulate_policy_gradient(DualDecoderTransformer& model, const Example& example,
                                          const std::vector<RewardSample>& samples);

struct ReinforceStats {
  std::size_t examples = 0;  // examples that produced at least one sample
  std::size_t updates = 0;   // examples whose rewards were not all equal
  double mean_reward = 0.0;  // averaged over `examples`
  bool stepped = false;
};

// Samples, scores and accumulates the policy gradient for every example of
// the batch, then applies one clipped optimizer update. Examples whose
// rewards are all equal contribute nothing; with no contribution at all the
// parameters are left untouched.
ReinforceStats reinforce_step(DualDecoderTransformer& model, Adam& opt,
                              const std::vector<const Example*>& batch,
                              const Vocabulary& target_vocab, const TrainConfig& config);

struct TrainSummary {
  std::size_t epochs = 0;
  std::optional<EvalReport> last_train;
  std::optional<EvalReport> last_dev;
};

TrainSummary train_mle(DualDecoderTransformer& model, const std::vector<Example>& train,
                       const std::vector<Example>& dev, const Vocabulary& target_vocab,
                       const TrainConfig& config, const MetricsSink& sink = {});

TrainSummary train_rl(DualDecoderTransformer& model, const std::vector<Example>& train,
                      const std::vector<Example>& dev, const Vocabulary& target_vocab,
                      const TrainConfig& config, const MetricsSink& sink = {});

}  // namespace mwp
