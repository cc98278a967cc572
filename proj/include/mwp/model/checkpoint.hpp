#pragma once

#include <filesystem>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mwp/model/transformer.hpp"

namespace mwp {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary container: 8-byte magic "MWPCKPT1", u32 format version, u64 header
// length, a JSON header {config, metadata, tensors:[{name, shape}]}, then each
// tensor's values as little-endian IEEE-754 doubles in header order.
struct Checkpoint {
  DualDecoderTransformer model;
  nlohmann::json metadata;
};

void save_checkpoint(const std::filesystem::path& path, const DualDecoderTransformer& model,
                     const nlohmann::json& metadata = nlohmann::json::object());

// Rebuilds the model from the stored config and checks every tensor name and
// shape against it before copying values.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mwp
