#include "mwp/model/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mwp/numerics/ops.hpp"

namespace mwp {

std::vector<double> sinusoidal_pe(std::size_t position, std::size_t dim) {
  if (dim == 0 || dim % 2 != 0) {
    throw ConfigError("sinusoidal_pe: dimension must be even and positive, got " + std::to_string(dim));
  }
  std::vector<double> pe(dim);
  const double pos = static_cast<double>(position);
  for (std::size_t i = 0; i < dim / 2; ++i) {
    const double rate = std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(dim));
    pe[2 * i] = std::sin(pos / rate);
    pe[2 * i + 1] = std::cos(pos / rate);
  }
  return pe;
}

namespace {

Tensor positions_block(std::size_t first, std::size_t count, std::size_t dim) {
  Tensor out = Tensor::matrix(count, dim);
  for (std::size_t r = 0; r < count; ++r) {
    auto pe = sinusoidal_pe(first + r, dim);
    std::copy(pe.begin(), pe.end(), out.row(r).begin());
  }
  return out;
}

Tensor uniform(std::size_t rows, std::size_t cols, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

// Mask of `rows` query rows over `cols` keys where each row sees the keys
// marked in `key_mask`.
Tensor broadcast_mask(std::size_t rows, std::span<const std::uint8_t> key_mask) {
  Tensor m = Tensor::matrix(rows, key_mask.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < key_mask.size(); ++c) m.at(r, c) = key_mask[c] ? 1.0 : 0.0;
  }
  return m;
}

Tensor causal_mask(std::size_t n) {
  Tensor m = Tensor::matrix(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c <= r; ++c) m.at(r, c) = 1.0;
  }
  return m;
}

void check_source(std::span<const int> src, std::span<const std::uint8_t> mask,
                  const ModelConfig& cfg) {
  if (src.empty()) throw ContractError("encode: empty source sequence");
  if (mask.size() != src.size()) throw DimensionError("encode: mask length differs from source");
  if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) {
    throw ContractError("encode: source has no unmasked token");
  }
  if (src.size() > cfg.max_positions) {
    throw ConfigError("encode: source length " + std::to_string(src.size()) +
                      " exceeds max_positions " + std::to_string(cfg.max_positions));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// DualDecoderTransformer

DualDecoderTransformer::DualDecoderTransformer(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const std::size_t d = config_.model_dim;
  src_embed_ = add("src_embed", uniform(config_.src_vocab, config_.embed_dim, 0.05, rng));
  src_proj_ = add_linear("src_proj", config_.embed_dim, d, rng);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string prefix = "enc." + std::to_string(l);
    EncoderLayerParams layer;
    layer.self = add_attention(prefix + ".self", rng);
    layer.norm1 = add_norm(prefix + ".norm1", d);
    layer.ff1 = add_linear(prefix + ".ff1", d, config_.ff_dim, rng);
    layer.ff2 = add_linear(prefix + ".ff2", config_.ff_dim, d, rng);
    layer.norm2 = add_norm(prefix + ".norm2", d);
    encoder_.push_back(layer);
  }
  if (config_.separate_target_embeddings) {
    const std::size_t e_l2r = add("tgt_embed.l2r", uniform(config_.tgt_vocab, d, 0.05, rng));
    const std::size_t e_r2l = add("tgt_embed.r2l", uniform(config_.tgt_vocab, d, 0.05, rng));
    l2r_ = add_decoder("dec_l2r", e_l2r, rng);
    r2l_ = add_decoder("dec_r2l", e_r2l, rng);
  } else {
    const std::size_t shared = add("tgt_embed", uniform(config_.tgt_vocab, d, 0.05, rng));
    l2r_ = add_decoder("dec_l2r", shared, rng);
    r2l_ = add_decoder("dec_r2l", shared, rng);
  }
}

std::size_t DualDecoderTransformer::add(const std::string& name, Tensor value) {
  index_.emplace(name, params_.size());
  Parameter p{name, std::move(value), {}};
  p.zero_grad();
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

LinearParams DualDecoderTransformer::add_linear(const std::string& name, std::size_t in,
                                                std::size_t out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  LinearParams p;
  p.weight = add(name + ".w", uniform(in, out, limit, rng));
  p.bias = add(name + ".b", Tensor::matrix(1, out));
  return p;
}

NormParams DualDecoderTransformer::add_norm(const std::string& name, std::size_t dim) {
  NormParams p;
  p.gain = add(name + ".gain", Tensor::matrix(1, dim, 1.0));
  p.bias = add(name + ".bias", Tensor::matrix(1, dim));
  return p;
}

AttentionParams DualDecoderTransformer::add_attention(const std::string& name,
                                                      std::mt19937_64& rng) {
  const std::size_t d = config_.model_dim;
  AttentionParams p;
  p.q = add_linear(name + ".q", d, d, rng);
  p.k = add_linear(name + ".k", d, d, rng);
  p.v = add_linear(name + ".v", d, d, rng);
  p.out = add_linear(name + ".out", d, d, rng);
  return p;
}

DecoderParams DualDecoderTransformer::add_decoder(const std::string& prefix, std::size_t embed,
                                                  std::mt19937_64& rng) {
  const std::size_t d = config_.model_dim;
  DecoderParams dec;
  dec.embed = embed;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string name = prefix + "." + std::to_string(l);
    DecoderLayerParams layer;
    layer.self = add_attention(name + ".self", rng);
    layer.norm1 = add_norm(name + ".norm1", d);
    layer.cross = add_attention(name + ".cross", rng);
    layer.norm2 = add_norm(name + ".norm2", d);
    layer.ff1 = add_linear(name + ".ff1", d, config_.ff_dim, rng);
    layer.ff2 = add_linear(name + ".ff2", config_.ff_dim, d, rng);
    layer.norm3 = add_norm(name + ".norm3", d);
    dec.layers.push_back(layer);
  }
  dec.output = add_linear(prefix + ".out", d, config_.tgt_vocab, rng);
  return dec;
}

Parameter& DualDecoderTransformer::parameter(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return params_[it->second];
}

const Parameter& DualDecoderTransformer::parameter(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return params_[it->second];
}

std::size_t DualDecoderTransformer::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void DualDecoderTransformer::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

bool DualDecoderTransformer::is_encoder_parameter(const std::string& name) const {
  return name.starts_with("src_") || name.starts_with("enc.");
}

// ---------------------------------------------------------------------------
// Sequences and batches

TeacherForcing teacher_forcing(Direction d, std::span<const int> canonical) {
  TeacherForcing tf;
  std::vector<int> seq(canonical.begin(), canonical.end());
  if (d == Direction::kR2L) std::reverse(seq.begin(), seq.end());
  tf.inputs.push_back(d == Direction::kL2R ? kBos : kBosR);
  tf.inputs.insert(tf.inputs.end(), seq.begin(), seq.end());
  tf.targets = seq;
  tf.targets.push_back(kEos);
  return tf;
}

Batch make_batch(const std::vector<std::vector<int>>& sources,
                 const std::vector<std::vector<int>>& targets) {
  if (sources.size() != targets.size()) throw DimensionError("make_batch: source/target count differ");
  Batch b;
  std::size_t width = 0;
  for (const auto& s : sources) width = std::max(width, s.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (sources[i].empty()) throw ContractError("make_batch: empty source row");
    std::vector<int> row = sources[i];
    std::vector<std::uint8_t> mask(row.size(), 1);
    row.resize(width, kPad);
    mask.resize(width, 0);
    b.src.push_back(std::move(row));
    b.src_mask.push_back(std::move(mask));
    b.src_lengths.push_back(sources[i].size());
    b.tgt.push_back(targets[i]);
  }
  return b;
}

// ---------------------------------------------------------------------------
// Forward

Forward::Forward(Graph& graph, DualDecoderTransformer& model, bool training, std::mt19937_64* rng)
    : graph_(graph), model_(model), mutable_model_(&model), training_(training), rng_(rng) {
  if (training_ && model_.config().dropout > 0.0 && rng_ == nullptr) {
    throw ContractError("Forward: training mode with dropout needs an rng");
  }
  bound_.resize(model_.parameters().size());
}

Forward::Forward(Graph& graph, const DualDecoderTransformer& model) : graph_(graph), model_(model) {
  if (graph_.recording()) {
    throw ContractError("Forward: a const model can only be used with a non-recording graph");
  }
  bound_.resize(model_.parameters().size());
}

Var Forward::param(std::size_t id) {
  if (!bound_[id].valid()) {
    if (graph_.recording() && mutable_model_ != nullptr) {
      bound_[id] = graph_.parameter(mutable_model_->parameters()[id]);
    } else {
      bound_[id] = graph_.reference(model_.parameters()[id].value);
    }
  }
  return bound_[id];
}

Var Forward::linear(const LinearParams& p, Var x) {
  return mwp::linear(x, param(p.weight), param(p.bias));
}

Var Forward::norm(const NormParams& p, Var x) { return layer_norm(x, param(p.gain), param(p.bias)); }

Var Forward::drop(Var x) {
  if (!training_) return x;
  return dropout(x, model_.config().dropout, *rng_);
}

Var Forward::attend(const AttentionParams& p, Var q, Var k, Var v, const Tensor& mask) {
  const std::size_t heads = model_.config().heads;
  const std::size_t dh = model_.config().model_dim / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> outputs;
  outputs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = heads == 1 ? q : slice_cols(q, h * dh, dh);
    Var kh = heads == 1 ? k : slice_cols(k, h * dh, dh);
    Var vh = heads == 1 ? v : slice_cols(v, h * dh, dh);
    Var weights = masked_softmax(scale(matmul_nt(qh, kh), inv_sqrt), mask);
    outputs.push_back(matmul(weights, vh));
  }
  Var joined = heads == 1 ? outputs.front() : concat_cols(outputs);
  return linear(p.out, joined);
}

Var Forward::encode(std::span<const int> src, std::span<const std::uint8_t> mask) {
  const ModelConfig& cfg = model_.config();
  check_source(src, mask, cfg);
  const double emb_scale = std::sqrt(static_cast<double>(cfg.model_dim));
  Var x = gather_rows(param(model_.src_embed()), src);
  x = scale(linear(model_.src_proj(), x), emb_scale);
  x = add(x, graph_.constant(positions_block(0, src.size(), cfg.model_dim)));
  x = drop(x);
  const Tensor attn_mask = broadcast_mask(src.size(), mask);
  for (const EncoderLayerParams& layer : model_.encoder()) {
    Var a = attend(layer.self, linear(layer.self.q, x), linear(layer.self.k, x),
                   linear(layer.self.v, x), attn_mask);
    x = norm(layer.norm1, add(x, drop(a)));
    Var f = linear(layer.ff2, relu(linear(layer.ff1, x)));
    x = norm(layer.norm2, add(x, drop(f)));
  }
  return x;
}

Var Forward::embed_target(Direction dir, std::span<const int> tokens, std::size_t first_position) {
  const ModelConfig& cfg = model_.config();
  const double emb_scale = std::sqrt(static_cast<double>(cfg.model_dim));
  Var x = scale(gather_rows(param(model_.decoder(dir).embed), tokens), emb_scale);
  x = add(x, graph_.constant(positions_block(first_position, tokens.size(), cfg.model_dim)));
  return drop(x);
}

Forward::LayerOutput Forward::decoder_layer(const DecoderLayerParams& p, Var x, Var prefix_keys,
                                            Var prefix_values, const Tensor& self_mask,
                                            Var cross_keys, Var cross_values,
                                            const Tensor& cross_mask) {
  Var keys = linear(p.self.k, x);
  Var values = linear(p.self.v, x);
  if (prefix_keys.valid()) {
    keys = concat_rows({prefix_keys, keys});
    values = concat_rows({prefix_values, values});
  }
  Var a = attend(p.self, linear(p.self.q, x), keys, values, self_mask);
  x = norm(p.norm1, add(x, drop(a)));
  Var c = attend(p.cross, linear(p.cross.q, x), cross_keys, cross_values, cross_mask);
  x = norm(p.norm2, add(x, drop(c)));
  Var f = linear(p.ff2, relu(linear(p.ff1, x)));
  x = norm(p.norm3, add(x, drop(f)));
  return {x, keys, values};
}

Var Forward::decode(Direction dir, std::span<const int> inputs, Var memory,
                    std::span<const std::uint8_t> src_mask) {
  const ModelConfig& cfg = model_.config();
  if (inputs.empty()) throw ContractError("decode: empty decoder input");
  if (inputs.size() > cfg.max_positions) {
    throw ConfigError("decode: prefix length " + std::to_string(inputs.size()) +
                      " exceeds max_positions " + std::to_string(cfg.max_positions));
  }
  if (!memory.valid() || memory.rows() == 0) throw ContractError("decode: empty encoder memory");
  if (src_mask.size() != memory.rows()) throw DimensionError("decode: mask length differs from memory");
  if (std::none_of(src_mask.begin(), src_mask.end(), [](std::uint8_t m) { return m != 0; })) {
    throw ContractError("decode: encoder memory has no unmasked position");
  }
  const DecoderParams& dec = model_.decoder(dir);
  Var x = embed_target(dir, inputs, 0);
  const Tensor self_mask = causal_mask(inputs.size());
  const Tensor cross_mask = broadcast_mask(inputs.size(), src_mask);
  for (const DecoderLayerParams& layer : dec.layers) {
    Var ck = linear(layer.cross.k, memory);
    Var cv = linear(layer.cross.v, memory);
    x = decoder_layer(layer, x, Var(), Var(), self_mask, ck, cv, cross_mask).x;
  }
  return linear(dec.output, x);
}

// ---------------------------------------------------------------------------
// Joint loss

JointLoss joint_loss(Forward& fwd, const Batch& batch) {
  if (batch.size() == 0) throw ContractError("joint_loss: empty batch");
  std::size_t width = 0;
  for (const auto& t : batch.tgt) width = std::max(width, t.size() + 1);
  Var dir_loss[2];
  for (std::size_t b = 0; b < batch.size(); ++b) {
    Var memory = fwd.encode(batch.src[b], batch.src_mask[b]);
    for (Direction dir : {Direction::kL2R, Direction::kR2L}) {
      TeacherForcing tf = teacher_forcing(dir, batch.tgt[b]);
      tf.inputs.resize(width, kPad);
      tf.targets.resize(width, kIgnoreIndex);
      Var logits = fwd.decode(dir, tf.inputs, memory, batch.src_mask[b]);
      Var ce = cross_entropy(logits, tf.targets, kIgnoreIndex);
      Var& acc = dir_loss[dir == Direction::kL2R ? 0 : 1];
      acc = acc.valid() ? add(acc, ce) : ce;
    }
  }
  return {add(dir_loss[0], dir_loss[1]), dir_loss[0], dir_loss[1]};
}

JointLossValue joint_loss_value(const DualDecoderTransformer& model, const Batch& batch) {
  Graph g(false);
  Forward fwd(g, model);
  JointLoss loss = joint_loss(fwd, batch);
  return {loss.total.value().item(), loss.l2r.value().item(), loss.r2l.value().item()};
}

// ---------------------------------------------------------------------------
// Incremental decoding

EncodedSource encode_source(const DualDecoderTransformer& model, std::span<const int> src) {
  Graph g(false);
  Forward fwd(g, model);
  std::vector<std::uint8_t> mask(src.size(), 1);
  Var memory = fwd.encode(src, mask);
  EncodedSource out;
  out.memory = memory.value();
  out.key_mask = Tensor::matrix(1, src.size(), 1.0);
  for (Direction dir : {Direction::kL2R, Direction::kR2L}) {
    const int k = dir == Direction::kL2R ? 0 : 1;
    for (const DecoderLayerParams& layer : model.decoder(dir).layers) {
      out.cross_keys[k].push_back(fwd.linear(layer.cross.k, memory).value());
      out.cross_values[k].push_back(fwd.linear(layer.cross.v, memory).value());
    }
  }
  return out;
}

IncrementalDecoder::IncrementalDecoder(const DualDecoderTransformer& model, Direction dir,
                                       const EncodedSource& source)
    : model_(model), dir_(dir), source_(source) {}

DecoderState IncrementalDecoder::initial_state() const {
  DecoderState s;
  s.keys.resize(model_.config().layers);
  s.values.resize(model_.config().layers);
  return s;
}

std::vector<double> IncrementalDecoder::step(DecoderState& state, int token) const {
  const ModelConfig& cfg = model_.config();
  if (state.length + 1 > cfg.max_positions) {
    throw ConfigError("decode: prefix length exceeds max_positions " +
                      std::to_string(cfg.max_positions));
  }
  Graph g(false);
  Forward fwd(g, model_);
  const DecoderParams& dec = model_.decoder(dir_);
  const int k = dir_ == Direction::kL2R ? 0 : 1;
  const int tok[1] = {token};
  Var x = fwd.embed_target(dir_, tok, state.length);
  const Tensor self_mask = Tensor::matrix(1, state.length + 1, 1.0);
  for (std::size_t l = 0; l < dec.layers.size(); ++l) {
    Var pk, pv;
    if (state.length > 0) {
      pk = g.reference(state.keys[l]);
      pv = g.reference(state.values[l]);
    }
    auto out = fwd.decoder_layer(dec.layers[l], x, pk, pv, self_mask,
                                 g.reference(source_.cross_keys[k][l]),
                                 g.reference(source_.cross_values[k][l]), source_.key_mask);
    x = out.x;
    state.keys[l] = out.keys.value();
    state.values[l] = out.values.value();
  }
  Tensor logp = log_softmax_rows(fwd.linear(dec.output, x).value());
  ++state.length;
  return std::vector<double>(logp.data().begin(), logp.data().end());
}

}  // namespace mwp
