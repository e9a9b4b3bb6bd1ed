#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lase/atomic_file.hpp"
#include "lase/tensor.hpp"

namespace lase {

/// A named reference to a parameter tensor owned elsewhere.
struct ParamRef {
  std::string name;
  Tensor2* tensor = nullptr;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return out;
  }
}

}  // namespace detail

/// Writes `<base>.json` (names, shapes, seed, blob name) and `<base>.bin`
/// (all values as little-endian float64, concatenated in manifest order).
inline void save_checkpoint(const std::filesystem::path& base, const std::vector<ParamRef>& params,
                            std::uint64_t seed, const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json manifest;
  auto blob_path = base;
  blob_path += ".bin";
  manifest["format"] = "lase-checkpoint-v1";
  manifest["seed"] = seed;
  manifest["blob"] = blob_path.filename().string();
  manifest["params"] = nlohmann::json::array();
  std::string blob;
  for (const auto& p : params) {
    manifest["params"].push_back({{"name", p.name}, {"rows", p.tensor->rows()}, {"cols", p.tensor->cols()}});
    for (double v : p.tensor->data()) {
      const auto bits = detail::to_little_endian(std::bit_cast<std::uint64_t>(v));
      char buf[8];
      std::memcpy(buf, &bits, 8);
      blob.append(buf, 8);
    }
  }
  if (!extra.empty()) manifest["extra"] = extra;
  auto manifest_path = base;
  manifest_path += ".json";
  write_file_atomic(blob_path, blob);
  write_file_atomic(manifest_path, manifest.dump(2) + "\n");
}

/// Loads values into `params`; names and shapes must match the manifest
/// entry for entry. Returns the manifest.
inline nlohmann::json load_checkpoint(const std::filesystem::path& base, const std::vector<ParamRef>& params) {
  auto manifest_path = base;
  manifest_path += ".json";
  std::ifstream in(manifest_path);
  if (!in) throw CheckpointError("cannot open " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  const auto& entries = manifest.at("params");
  if (entries.size() != params.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(entries.size()) + " tensors, model expects " +
                          std::to_string(params.size()));
  }
  const auto blob_path = manifest_path.parent_path() / manifest.at("blob").get<std::string>();
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw CheckpointError("cannot open " + blob_path.string());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = entries[i];
    auto& t = *params[i].tensor;
    if (e.at("name").get<std::string>() != params[i].name || e.at("rows").get<std::size_t>() != t.rows() ||
        e.at("cols").get<std::size_t>() != t.cols()) {
      throw CheckpointError("checkpoint entry " + std::to_string(i) + " (" + e.at("name").get<std::string>() +
                            ") does not match parameter " + params[i].name);
    }
    for (auto& v : t.data()) {
      char buf[8];
      if (!blob.read(buf, 8)) throw CheckpointError("checkpoint blob truncated");
      std::uint64_t bits = 0;
      std::memcpy(&bits, buf, 8);
      v = std::bit_cast<double>(detail::to_little_endian(bits));
    }
  }
  return manifest;
}

}  // namespace lase
