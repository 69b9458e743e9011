#pragma once

#include "driftwatch/pipeline.hpp"

#include <filesystem>
#include <stdexcept>

namespace driftwatch {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Versioned binary container: model parameter tensors (named, with shapes),
// entity records, rehearsal pool, mini-graphs, and window history. Doubles
// are stored bit-exact so a restored run continues byte-identically.
// Loading rejects bad magic, unknown versions and mismatched tensor shapes.
void save_checkpoint(const Engine& engine, const std::filesystem::path& path);
Engine load_checkpoint(const std::filesystem::path& path, const RuntimeConfig& cfg);

struct CheckpointInfo {
  std::uint32_t version = 0;
  ModelDims dims;
  std::size_t entity_count = 0;
  std::int64_t next_window = 0;
};

CheckpointInfo inspect_checkpoint(const std::filesystem::path& path);

}  // namespace driftwatch
