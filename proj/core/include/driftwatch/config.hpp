#pragma once

#include "driftwatch/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace driftwatch {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Suspicion transfer variant: Literal applies beta*max(O.ss, S.ss) as written,
// which can lower an already-suspicious receiver; StrictMax never lowers.
enum class TransferMode : std::uint8_t { Literal, StrictMax };

struct RuntimeConfig {
  // stream windowing
  std::int64_t window_ns = 900'000'000'000;  // 15 minutes of stream time

  // event encoding
  int hash_dim = 64;  // feature-hash buckets per entity
  double decay_beta = 0.95;
  TransferMode transfer_mode = TransferMode::Literal;
  std::vector<std::string> whitelist = {"libc.so", "libm.so", "ld.so", "libdl"};

  // reconstructor model
  int mem_dim = 32;
  int emb_dim = 32;
  int time_dim = 8;
  int neighbor_cap = 16;
  double learn_rate = 1e-3;
  double grad_clip = 5.0;
  bool attention_softmax = true;  // false: plain unweighted neighbor sum

  // thresholds
  double sigma_stds = 2.0;  // anomaly threshold: mean + sigma_stds * std
  double gamma = 0.5;       // node suspicion threshold
  double delta = 0.7;       // path score threshold

  // rehearsal
  int k_hop = 4;
  int pseudo_cap = 3;             // max pseudo edges per event endpoint
  std::size_t pool_capacity = 0;  // 0 = unbounded, else FIFO eviction

  // Initial model fit: the first warmup_windows train unconditionally; after
  // that, updates require at least one rehearsal node in the window.
  int warmup_windows = 2;

  // path-level filtering
  int walk_count = 20;
  int walk_len = 16;

  // evaluation
  int eval_graph_windows = 5;  // windows per graph at graph-level eval

  std::uint64_t seed = 1;

  // ablation switches (benchmarking only)
  bool ablate_pseudo_edges = false;
  bool ablate_state_transfer = false;
  bool ablate_path_filter = false;

  int encoding_dim() const { return 2 * hash_dim + 2 + kRelationDim; }
  int message_dim() const { return 2 * mem_dim + time_dim + encoding_dim(); }

  // Throws ConfigError when a value is out of range (hash_dim < 8, beta
  // outside (0,1], non-positive model dims, ...).
  void validate() const;

  // Applies a single "key = value" assignment; throws ConfigError on unknown
  // keys or unparsable values.
  void set(const std::string& key, const std::string& value);
};

// Flat key-value config text: one "key = value" per line, '#' comments.
RuntimeConfig parse_config_text(const std::string& text, RuntimeConfig base = {});
RuntimeConfig load_config_file(const std::filesystem::path& path, RuntimeConfig base = {});

// Applies DRIFTWATCH_<UPPERCASE_KEY> environment overrides.
void apply_env_overrides(RuntimeConfig& cfg);

// Generic key-value file reader shared by pipeline and generator configs.
std::map<std::string, std::string> parse_key_values(const std::string& text);

}  // namespace driftwatch
