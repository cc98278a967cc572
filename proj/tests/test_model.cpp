#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "mwp/model/checkpoint.hpp"
#include "mwp/model/transformer.hpp"
#include "mwp/numerics/ops.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace mwp;
using mwp::testing::random_batch;
using mwp::testing::tiny_config;

namespace {

Tensor encode_eval(const DualDecoderTransformer& model, const std::vector<int>& src,
                   const std::vector<std::uint8_t>& mask) {
  Graph g(false);
  Forward fwd(g, model);
  return fwd.encode(src, mask).value();
}

Tensor decode_eval(const DualDecoderTransformer& model, Direction dir, const std::vector<int>& src,
                   const std::vector<int>& inputs) {
  Graph g(false);
  Forward fwd(g, model);
  const std::vector<std::uint8_t> mask(src.size(), 1);
  Var memory = fwd.encode(src, mask);
  return fwd.decode(dir, inputs, memory, mask).value();
}

// Makes the right-to-left decoder an exact copy of the left-to-right one,
// including the begin sentinel's embedding.
void mirror_decoders(DualDecoderTransformer& model) {
  for (Parameter& p : model.parameters()) {
    if (p.name.starts_with("dec_r2l.")) {
      p.value = model.parameter("dec_l2r." + p.name.substr(8)).value;
    }
  }
  Parameter& embed = model.parameter("tgt_embed");
  std::copy(embed.value.row(kBos).begin(), embed.value.row(kBos).end(),
            embed.value.row(kBosR).begin());
}

std::size_t count_target_tokens(const Batch& b) {
  std::size_t n = 0;
  for (const auto& t : b.tgt) n += t.size() + 1;  // plus the end sentinel
  return n;
}

}  // namespace

TEST_CASE("sinusoidal position encoding") {
  const auto p0 = sinusoidal_pe(0, 4);
  CHECK(p0 == std::vector<double>{0.0, 1.0, 0.0, 1.0});

  const auto p1 = sinusoidal_pe(1, 4);
  CHECK(p1[0] == doctest::Approx(std::sin(1.0)).epsilon(1e-14));
  CHECK(p1[1] == doctest::Approx(std::cos(1.0)).epsilon(1e-14));
  CHECK(p1[2] == doctest::Approx(std::sin(0.01)).epsilon(1e-14));
  CHECK(p1[3] == doctest::Approx(std::cos(0.01)).epsilon(1e-14));

  for (std::size_t pos : {0, 3, 17, 999, 123456}) {
    for (double v : sinusoidal_pe(pos, 64)) CHECK(std::abs(v) <= 1.0);
  }
  CHECK_THROWS_AS(sinusoidal_pe(2, 5), ConfigError);
}

TEST_CASE("model config validation and serialisation") {
  ModelConfig c = ModelConfig::desk(40, 30);
  CHECK_NOTHROW(c.validate());
  CHECK(c.layers == 2);
  CHECK(c.model_dim == 64);
  CHECK(c.embed_dim == 32);
  CHECK(c.heads == 4);
  CHECK(c.ff_dim == 128);

  const ModelConfig big = ModelConfig::large(40, 30);
  CHECK(big.layers == 3);
  CHECK(big.model_dim == 512);
  CHECK(big.embed_dim == 300);
  CHECK(big.heads == 8);

  ModelConfig bad = c;
  bad.heads = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.layers = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.model_dim = 63;
  bad.heads = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  const nlohmann::json j = c;
  CHECK(j.get<ModelConfig>().model_dim == c.model_dim);
  CHECK(j.get<ModelConfig>().src_vocab == 40);
}

TEST_CASE("teacher forcing sequences") {
  const std::vector<int> y{7, 8, 9};
  const TeacherForcing l2r = teacher_forcing(Direction::kL2R, y);
  CHECK(l2r.inputs == std::vector<int>{kBos, 7, 8, 9});
  CHECK(l2r.targets == std::vector<int>{7, 8, 9, kEos});
  const TeacherForcing r2l = teacher_forcing(Direction::kR2L, y);
  CHECK(r2l.inputs == std::vector<int>{kBosR, 9, 8, 7});
  CHECK(r2l.targets == std::vector<int>{9, 8, 7, kEos});
}

TEST_CASE("parameter layout") {
  DualDecoderTransformer model(tiny_config(), 1);
  CHECK(model.has_parameter("tgt_embed"));
  CHECK(model.has_parameter("dec_l2r.out.w"));
  CHECK(model.has_parameter("dec_r2l.out.w"));
  CHECK(model.parameter("src_embed").value.cols() == 6);
  CHECK(model.parameter("tgt_embed").value.cols() == 8);
  for (const Parameter& p : model.parameters()) CHECK(p.value.all_finite());
  CHECK(model.is_encoder_parameter("enc.0.self.q.w"));
  CHECK_FALSE(model.is_encoder_parameter("dec_l2r.0.self.q.w"));

  ModelConfig sep = tiny_config();
  sep.separate_target_embeddings = true;
  DualDecoderTransformer separate(sep, 1);
  CHECK(separate.has_parameter("tgt_embed.l2r"));
  CHECK(separate.has_parameter("tgt_embed.r2l"));
  CHECK_FALSE(separate.has_parameter("tgt_embed"));
}

TEST_CASE("initialisation is seeded") {
  DualDecoderTransformer a(tiny_config(), 5), b(tiny_config(), 5), c(tiny_config(), 6);
  bool differs = false;
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    CHECK(a.parameters()[i].value == b.parameters()[i].value);
    differs = differs || !(a.parameters()[i].value == c.parameters()[i].value);
  }
  CHECK(differs);
}

TEST_CASE("encoder determinism, shape and padding") {
  DualDecoderTransformer model(tiny_config(), 2);
  const std::vector<int> src{5, 6, 7, 8};
  const std::vector<std::uint8_t> full(4, 1);
  CHECK(encode_eval(model, src, full) == encode_eval(model, src, full));

  const Tensor one = encode_eval(model, {6}, {1});
  CHECK(one.rows() == 1);
  CHECK(one.cols() == 8);

  // Tokens under the padding mask do not influence real positions.
  const std::vector<std::uint8_t> mask{1, 1, 1, 0, 0};
  const Tensor a = encode_eval(model, {5, 6, 7, kPad, kPad}, mask);
  const Tensor b = encode_eval(model, {5, 6, 7, 8, 5}, mask);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) CHECK(std::abs(a.at(r, c) - b.at(r, c)) < 1e-9);
  }

  CHECK_THROWS_AS(encode_eval(model, {5, 99}, {1, 1}), std::out_of_range);
  CHECK_THROWS(encode_eval(model, {}, {}));
}

TEST_CASE("decoders are causal in their own reading order") {
  DualDecoderTransformer model(tiny_config(), 3);
  const std::vector<int> src{5, 6, 7};
  for (Direction dir : {Direction::kL2R, Direction::kR2L}) {
    const int begin = dir == Direction::kL2R ? kBos : kBosR;
    const std::vector<int> a{begin, 5, 6, 7, 5};
    for (std::size_t cut = 1; cut < a.size(); ++cut) {
      std::vector<int> b = a;
      for (std::size_t k = cut; k < b.size(); ++k) b[k] = b[k] == 7 ? 6 : 7;
      const Tensor la = decode_eval(model, dir, src, a), lb = decode_eval(model, dir, src, b);
      for (std::size_t t = 0; t < cut; ++t) {
        for (std::size_t v = 0; v < la.cols(); ++v) {
          CHECK(std::abs(la.at(t, v) - lb.at(t, v)) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("decoder error contracts") {
  ModelConfig c = tiny_config();
  c.max_positions = 4;
  DualDecoderTransformer model(c, 3);
  Graph g(false);
  Forward fwd(g, model);
  const std::vector<int> src{5, 6};
  const std::vector<std::uint8_t> mask(2, 1);
  Var memory = fwd.encode(src, mask);
  const std::vector<int> long_prefix{kBos, 5, 6, 7, 5};
  CHECK_THROWS_AS(fwd.decode(Direction::kL2R, long_prefix, memory, mask), ConfigError);
  const std::vector<int> ok{kBos, 5};
  CHECK_THROWS_AS(fwd.decode(Direction::kL2R, ok, Var(), mask), ContractError);
}

TEST_CASE("right-to-left decoder mirrors left-to-right on reversed targets") {
  DualDecoderTransformer model(tiny_config(), 4);
  mirror_decoders(model);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto srcs = mwp::testing::random_rows(rng, 1, 2, 6, kNumSpecialTokens, 9);
    const auto tgts = mwp::testing::random_rows(rng, 1, 1, 6, kNumSpecialTokens, 8);
    std::vector<int> rev = tgts[0];
    std::reverse(rev.begin(), rev.end());
    const JointLossValue forward = joint_loss_value(model, make_batch(srcs, {tgts[0]}));
    const JointLossValue backward = joint_loss_value(model, make_batch(srcs, {rev}));
    CHECK(std::abs(forward.r2l - backward.l2r) < 1e-9);
    CHECK(std::abs(forward.l2r - backward.r2l) < 1e-9);
  }
  // A palindrome reads the same both ways.
  const JointLossValue pal = joint_loss_value(model, make_batch({{5, 6, 7}}, {{5, 6, 7, 6, 5}}));
  CHECK(std::abs(pal.l2r - pal.r2l) < 1e-9);
}

TEST_CASE("right-to-left loss equals a direct pass over the reversed target") {
  DualDecoderTransformer model(tiny_config(), 9);
  const std::vector<int> src{5, 8, 6}, y{5, 6, 7, 7};
  const JointLossValue joint = joint_loss_value(model, make_batch({src}, {y}));

  Graph g(false);
  Forward fwd(g, model);
  const std::vector<std::uint8_t> mask(src.size(), 1);
  Var memory = fwd.encode(src, mask);
  const std::vector<int> inputs{kBosR, 7, 7, 6, 5}, targets{7, 7, 6, 5, kEos};
  const double direct = cross_entropy(fwd.decode(Direction::kR2L, inputs, memory, mask), targets,
                                      kIgnoreIndex).value().item();
  CHECK(std::abs(direct - joint.r2l) < 1e-12);
}

TEST_CASE("joint loss is the exact sum of the two directions") {
  std::mt19937_64 rng(12);
  DualDecoderTransformer model(tiny_config(), 12);
  for (int trial = 0; trial < 5; ++trial) {
    const Batch batch = random_batch(rng, model.config(), 4);
    Graph g;
    Forward fwd(g, model);
    const JointLoss loss = joint_loss(fwd, batch);
    CHECK(loss.total.value().item() == loss.l2r.value().item() + loss.r2l.value().item());
  }
}

TEST_CASE("zeroed output projections give a uniform distribution") {
  std::mt19937_64 rng(13);
  DualDecoderTransformer model(tiny_config(), 13);
  for (const char* dir : {"dec_l2r", "dec_r2l"}) {
    model.parameter(std::string(dir) + ".out.w").value.fill(0.0);
    model.parameter(std::string(dir) + ".out.b").value.fill(0.0);
  }
  const Batch batch = random_batch(rng, model.config(), 3);
  const double expected = 2.0 * static_cast<double>(count_target_tokens(batch)) * std::log(8.0);
  CHECK(std::abs(joint_loss_value(model, batch).total - expected) < 1e-9);
}

TEST_CASE("padding does not change a row's loss") {
  DualDecoderTransformer model(tiny_config(), 14);
  const std::vector<int> src{5, 6}, tgt{7};
  const JointLossValue alone = joint_loss_value(model, make_batch({src}, {tgt}));
  const JointLossValue other = joint_loss_value(model, make_batch({{8, 8, 7, 6, 5}}, {{5, 6, 7, 5}}));
  const JointLossValue both =
      joint_loss_value(model, make_batch({src, {8, 8, 7, 6, 5}}, {tgt, {5, 6, 7, 5}}));
  CHECK(std::abs(both.total - (alone.total + other.total)) < 1e-9);
}

TEST_CASE("encoder gradients come from both decoders") {
  std::mt19937_64 rng(15);
  DualDecoderTransformer model(tiny_config(), 15);
  const Batch batch = random_batch(rng, model.config(), 3);
  auto encoder_grads = [&](int which) {
    model.zero_grad();
    Graph g;
    Forward fwd(g, model);
    const JointLoss loss = joint_loss(fwd, batch);
    g.backward(which == 0 ? loss.l2r : which == 1 ? loss.r2l : loss.total);
    std::vector<double> out;
    for (const Parameter& p : model.parameters()) {
      if (model.is_encoder_parameter(p.name)) out.insert(out.end(), p.grad.data().begin(), p.grad.data().end());
    }
    return out;
  };
  const auto l2r = encoder_grads(0), r2l = encoder_grads(1), total = encoder_grads(2);
  double nl = 0.0, nr = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < total.size(); ++i) {
    nl += l2r[i] * l2r[i];
    nr += r2l[i] * r2l[i];
    worst = std::max(worst, std::abs(total[i] - (l2r[i] + r2l[i])));
  }
  CHECK(nl > 0.0);
  CHECK(nr > 0.0);
  CHECK(worst < 1e-10);
}

TEST_CASE("joint loss gradients match finite differences on a one-layer model") {
  std::mt19937_64 rng(16);
  DualDecoderTransformer model(tiny_config(9, 8, 1), 16);
  const Batch batch = random_batch(rng, model.config(), 2);
  const auto result = mwp::testing::check_model_gradients(model, batch, 0, 1);
  INFO("worst coordinate: " << result.worst << " error " << result.max_error);
  CHECK(result.checked == model.parameter_count());
  CHECK(result.max_error < 1e-4);
}

TEST_CASE("incremental decoding reproduces the teacher-forced pass") {
  DualDecoderTransformer model(tiny_config(9, 8, 2), 17);
  const std::vector<int> src{5, 6, 7, 8};
  const EncodedSource enc = encode_source(model, src);
  for (Direction dir : {Direction::kL2R, Direction::kR2L}) {
    const std::vector<int> inputs{dir == Direction::kL2R ? kBos : kBosR, 6, 7, 5, 7};
    const Tensor full = log_softmax_rows(decode_eval(model, dir, src, inputs));
    IncrementalDecoder dec(model, dir, enc);
    DecoderState state = dec.initial_state();
    CHECK(dec.begin_token() == inputs[0]);
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      const std::vector<double> logp = dec.step(state, inputs[t]);
      REQUIRE(logp.size() == full.cols());
      for (std::size_t v = 0; v < logp.size(); ++v) CHECK(std::abs(logp[v] - full.at(t, v)) < 1e-9);
    }
    CHECK(state.length == inputs.size());
  }
}

TEST_CASE("training mode applies dropout only when asked") {
  ModelConfig c = tiny_config();
  c.dropout = 0.5;
  DualDecoderTransformer model(c, 18);
  const Batch batch = make_batch({{5, 6, 7}}, {{5, 6}});
  std::mt19937_64 rng(1);
  Graph g;
  Forward train(g, model, true, &rng);
  const double noisy = joint_loss(train, batch).total.value().item();
  CHECK(noisy != joint_loss_value(model, batch).total);
  Graph h;
  CHECK_THROWS_AS(Forward(h, model, true, nullptr), ContractError);
}

TEST_CASE("checkpoint round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "mwp_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "model.ckpt";
  DualDecoderTransformer model(tiny_config(), 19);
  save_checkpoint(path, model, {{"note", "hello"}});
  const Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.metadata["note"] == "hello");
  CHECK(loaded.model.config().model_dim == model.config().model_dim);
  REQUIRE(loaded.model.parameters().size() == model.parameters().size());
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    CHECK(loaded.model.parameters()[i].name == model.parameters()[i].name);
    CHECK(loaded.model.parameters()[i].value == model.parameters()[i].value);
  }

  SUBCASE("bad magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
    f.close();
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  }
  SUBCASE("truncated") {
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint(dir / "absent.ckpt"), CheckpointError);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint shapes are validated against the config") {
  const auto path = std::filesystem::temp_directory_path() / "mwp_ckpt_shape.ckpt";
  DualDecoderTransformer model(tiny_config(), 20);
  save_checkpoint(path, model);
  // Rewrite the header so the config claims a different target vocabulary.
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const auto pos = bytes.find("\"tgt_vocab\":8");
  REQUIRE(pos != std::string::npos);
  bytes.replace(pos, 13, "\"tgt_vocab\":9");
  std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  std::filesystem::remove(path);
}
