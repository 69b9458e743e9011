#pragma once

#include "driftwatch/config.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace driftwatch {

// Seeded generator of desk-scale audit streams: repeated benign behavior
// templates (browser, mail client, build job) with small jitter, an optional
// distribution shift at drift_window (new file trees, remote addresses and
// process names), and an injected multi-window attack chain that starts at an
// external socket so suspicion can propagate to every attack entity.
struct ScenarioSpec {
  std::uint64_t seed = 7;
  int windows = 20;
  int drift_window = 10;                     // -1 disables the shift
  std::vector<int> attack_windows = {14, 15};
  std::int64_t window_ns = 900'000'000'000;

  static ScenarioSpec from_text(const std::string& text);
  static ScenarioSpec from_file(const std::filesystem::path& path);
  void validate() const;  // throws ConfigError (attack window out of range, ...)
};

struct SynthOutput {
  std::string stream_jsonl;   // ingest wire schema, sorted by timestamp
  std::string labels_jsonl;   // window and node labels, "attack" | "benign"
  std::size_t event_count = 0;
  std::size_t attack_event_count = 0;
  std::vector<std::string> attack_node_uuids;
};

SynthOutput generate(const ScenarioSpec& spec);

}  // namespace driftwatch
