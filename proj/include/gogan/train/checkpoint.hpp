#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gogan/train/trainer.hpp"

namespace gogan::train {

/// Bad magic, truncated data or checksum mismatch.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Readable file whose contents do not fit the caller (precision, config, shapes).
class CheckpointMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t fnv1a64(std::string_view bytes);

enum class DType : std::uint8_t { F32 = 1, F64 = 2 };

template <class T>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::F32; }
template <>
constexpr DType dtype_of<double>() { return DType::F64; }

struct TensorEntry {
  std::string name;
  DType dtype = DType::F64;
  std::vector<std::uint64_t> shape;
};

struct CheckpointInfo {
  std::uint32_t version = 0;
  std::uint64_t fingerprint = 0;
  DType dtype = DType::F64;
  std::string config_text;
  std::vector<TensorEntry> tensors;
  std::int64_t epoch = 0;
  std::int64_t global_step = 0;
  std::int64_t d_updates = 0;
  std::int64_t g_updates = 0;
};

/// Layout: "GOG1", u32 version, u64 fingerprint of `config_text`, u8 dtype,
/// the config text, named tensors (name, dtype tag, shape, little-endian
/// payload) for both networks and their normalization buffers, Adam state,
/// trainer state, RNG state, and a trailing FNV-1a checksum of everything
/// before it. Written to a temporary file and renamed into place.
template <class T>
void save_checkpoint(const std::string& path, const Trainer<T>& trainer, const std::string& config_text);

/// Restores networks and trainer state. When `expected_fingerprint` is set
/// and differs from the stored one, throws CheckpointMismatch.
template <class T>
void load_checkpoint(const std::string& path, Trainer<T>& trainer,
                     std::optional<std::uint64_t> expected_fingerprint = std::nullopt);

/// Loads only the generator weights and buffers (inference).
template <class T>
void load_generator(const std::string& path, net::Generator<T>& generator);

/// Header, tensor directory and counters; verifies the checksum.
CheckpointInfo inspect_checkpoint(const std::string& path);

extern template void save_checkpoint<float>(const std::string&, const Trainer<float>&, const std::string&);
extern template void save_checkpoint<double>(const std::string&, const Trainer<double>&, const std::string&);
extern template void load_checkpoint<float>(const std::string&, Trainer<float>&, std::optional<std::uint64_t>);
extern template void load_checkpoint<double>(const std::string&, Trainer<double>&, std::optional<std::uint64_t>);
extern template void load_generator<float>(const std::string&, net::Generator<float>&);
extern template void load_generator<double>(const std::string&, net::Generator<double>&);

}  // namespace gogan::train
