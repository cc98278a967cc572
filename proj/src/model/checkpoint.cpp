#include "mwp/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace mwp {

namespace {

constexpr char kMagic[8] = {'M', 'W', 'P', 'C', 'K', 'P', 'T', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw CheckpointError("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const DualDecoderTransformer& model,
                     const nlohmann::json& metadata) {
  nlohmann::json header;
  header["config"] = model.config();
  header["metadata"] = metadata;
  header["tensors"] = nlohmann::json::array();
  for (const Parameter& p : model.parameters()) {
    header["tensors"].push_back({{"name", p.name}, {"shape", p.value.shape()}});
  }
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  write_raw(out, kCheckpointVersion);
  write_raw(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Parameter& p : model.parameters()) {
    auto data = p.value.data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!out) throw CheckpointError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(path.string() + " is not a checkpoint file");
  }
  const auto version = read_raw<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = read_raw<std::uint64_t>(in);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw CheckpointError("checkpoint header truncated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  }
  ModelConfig config = header.at("config").get<ModelConfig>();
  Checkpoint ckpt{DualDecoderTransformer(config, 0), header.value("metadata", nlohmann::json::object())};

  const auto& tensors = header.at("tensors");
  auto& params = ckpt.model.parameters();
  if (tensors.size() != params.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(tensors.size()) +
                          " tensors, config expects " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string name = tensors[i].at("name").get<std::string>();
    const auto shape = tensors[i].at("shape").get<std::vector<std::size_t>>();
    if (!ckpt.model.has_parameter(name)) throw CheckpointError("unexpected tensor '" + name + "'");
    Parameter& p = ckpt.model.parameter(name);
    if (shape != p.value.shape()) {
      throw CheckpointError("tensor '" + name + "' has shape " + shape_string(shape) +
                            ", config expects " + shape_string(p.value.shape()));
    }
    auto data = p.value.data();
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) throw CheckpointError("tensor data truncated at '" + name + "'");
    require_finite(p.value, "checkpoint load");
  }
  return ckpt;
}

}  // namespace mwp
