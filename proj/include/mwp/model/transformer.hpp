#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mwp/model/config.hpp"
#include "mwp/numerics/graph.hpp"
#include "mwp/numerics/tensor.hpp"

namespace mwp {

// Sinusoidal position encoding: entry 2i is sin(pos / 10000^(2i/dim)),
// entry 2i+1 the matching cosine.
std::vector<double> sinusoidal_pe(std::size_t position, std::size_t dim);

struct LinearParams {
  std::size_t weight = 0;
  std::size_t bias = 0;
};

struct NormParams {
  std::size_t gain = 0;
  std::size_t bias = 0;
};

struct AttentionParams {
  LinearParams q, k, v, out;
};

struct EncoderLayerParams {
  AttentionParams self;
  NormParams norm1;
  LinearParams ff1, ff2;
  NormParams norm2;
};

struct DecoderLayerParams {
  AttentionParams self;
  NormParams norm1;
  AttentionParams cross;
  NormParams norm2;
  LinearParams ff1, ff2;
  NormParams norm3;
};

struct DecoderParams {
  std::size_t embed = 0;
  std::vector<DecoderLayerParams> layers;
  LinearParams output;
};

// Shared encoder with a left-to-right and a right-to-left decoder. Holds all
// trainable tensors; layer structs refer to them by index so the model can be
// copied freely.
class DualDecoderTransformer {
 public:
  DualDecoderTransformer(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  Parameter& parameter(const std::string& name);
  const Parameter& parameter(const std::string& name) const;
  bool has_parameter(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t parameter_count() const;
  void zero_grad();

  std::size_t src_embed() const { return src_embed_; }
  const LinearParams& src_proj() const { return src_proj_; }
  const std::vector<EncoderLayerParams>& encoder() const { return encoder_; }
  const DecoderParams& decoder(Direction d) const { return d == Direction::kL2R ? l2r_ : r2l_; }

  // Names of parameters belonging to the encoder side (source embedding,
  // projection, encoder stack).
  bool is_encoder_parameter(const std::string& name) const;

 private:
  std::size_t add(const std::string& name, Tensor value);
  LinearParams add_linear(const std::string& name, std::size_t in, std::size_t out,
                          std::mt19937_64& rng);
  NormParams add_norm(const std::string& name, std::size_t dim);
  AttentionParams add_attention(const std::string& name, std::mt19937_64& rng);
  DecoderParams add_decoder(const std::string& prefix, std::size_t embed, std::mt19937_64& rng);

  ModelConfig config_;
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t src_embed_ = 0;
  LinearParams src_proj_;
  std::vector<EncoderLayerParams> encoder_;
  DecoderParams l2r_;
  DecoderParams r2l_;
};

// Builds the decoder input and target sequences for one direction from a
// canonical (left-to-right) target y_1..y_T:
//   L2R: input <BOS> y_1..y_T,   target y_1..y_T <EOS>
//   R2L: input <BOS_R> y_T..y_1, target y_T..y_1 <EOS>
struct TeacherForcing {
  std::vector<int> inputs;
  std::vector<int> targets;
};
TeacherForcing teacher_forcing(Direction d, std::span<const int> canonical);

// Padded mini-batch. Source rows are padded with kPad (mask 0); canonical
// targets are stored unpadded per row, and decoder rows are padded to a common
// length with kPad inputs and kIgnoreIndex targets.
struct Batch {
  std::vector<std::vector<int>> src;
  std::vector<std::vector<std::uint8_t>> src_mask;
  std::vector<std::vector<int>> tgt;
  std::vector<std::size_t> src_lengths;

  std::size_t size() const { return src.size(); }
};

Batch make_batch(const std::vector<std::vector<int>>& sources,
                 const std::vector<std::vector<int>>& targets);

// Builds model computations on a Graph. A recording graph binds parameters so
// that backward() fills Parameter::grad; a non-recording graph reads weights in
// place and is safe to use concurrently on a shared const model.
class Forward {
 public:
  Forward(Graph& graph, DualDecoderTransformer& model, bool training = false,
          std::mt19937_64* rng = nullptr);
  Forward(Graph& graph, const DualDecoderTransformer& model);

  Graph& graph() { return graph_; }
  Var param(std::size_t id);

  // Encoder memory [len x model_dim]. `mask` marks real tokens with 1.
  Var encode(std::span<const int> src, std::span<const std::uint8_t> mask);

  // Teacher-forced logits [len(inputs) x tgt_vocab] for one decoder. `inputs`
  // are in that decoder's reading order and start with its begin sentinel.
  // Padding positions (kPad after the real tokens) are never attended to by
  // real positions thanks to the causal mask.
  Var decode(Direction dir, std::span<const int> inputs, Var memory,
             std::span<const std::uint8_t> src_mask);

  struct LayerOutput {
    Var x;
    Var keys;
    Var values;
  };
  // One decoder layer. `x` holds rows at consecutive positions; `prefix_keys`
  // and `prefix_values` (possibly invalid) are cached projections of earlier
  // positions. `self_mask` is [rows x (prefix + rows)].
  LayerOutput decoder_layer(const DecoderLayerParams& p, Var x, Var prefix_keys,
                            Var prefix_values, const Tensor& self_mask, Var cross_keys,
                            Var cross_values, const Tensor& cross_mask);

  Var embed_target(Direction dir, std::span<const int> tokens, std::size_t first_position);
  Var linear(const LinearParams& p, Var x);

 private:
  Var attend(const AttentionParams& p, Var q, Var k, Var v, const Tensor& mask);
  Var norm(const NormParams& p, Var x);
  Var drop(Var x);

  Graph& graph_;
  const DualDecoderTransformer& model_;
  DualDecoderTransformer* mutable_model_ = nullptr;
  bool training_ = false;
  std::mt19937_64* rng_ = nullptr;
  std::vector<Var> bound_;
};

struct JointLoss {
  Var total;  // l2r + r2l
  Var l2r;
  Var r2l;
};

// Joint objective on a batch: summed token negative log-likelihood of both decoders.
JointLoss joint_loss(Forward& fwd, const Batch& batch);

// Scalar values of joint_loss evaluated without recording a graph.
struct JointLossValue {
  double total = 0.0;
  double l2r = 0.0;
  double r2l = 0.0;
};
JointLossValue joint_loss_value(const DualDecoderTransformer& model, const Batch& batch);

// Encoder output plus cross-attention keys/values of both decoders, used for
// incremental decoding.
struct EncodedSource {
  Tensor memory;
  Tensor key_mask;  // 1 x len, 1 for real tokens
  std::vector<Tensor> cross_keys[2];
  std::vector<Tensor> cross_values[2];
};

EncodedSource encode_source(const DualDecoderTransformer& model, std::span<const int> src);

// Per-hypothesis decoder cache: self-attention keys/values of every layer for
// all positions consumed so far.
struct DecoderState {
  std::vector<Tensor> keys;
  std::vector<Tensor> values;
  std::size_t length = 0;
};

// Runs one decoder a token at a time, reusing cached self-attention keys and
// values. Produces the same log-probabilities as the teacher-forced pass.
class IncrementalDecoder {
 public:
  IncrementalDecoder(const DualDecoderTransformer& model, Direction dir,
                     const EncodedSource& source);

  Direction direction() const { return dir_; }
  DecoderState initial_state() const;
  int begin_token() const { return dir_ == Direction::kL2R ? kBos : kBosR; }
  // Consumes `token` at the next position and returns log-probabilities
  // (length tgt_vocab) of the following token.
  std::vector<double> step(DecoderState& state, int token) const;

 private:
  const DualDecoderTransformer& model_;
  Direction dir_;
  const EncodedSource& source_;
};

}  // namespace mwp
