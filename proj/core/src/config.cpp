#include "driftwatch/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace driftwatch {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::int64_t to_i64(const std::string& key, const std::string& value) {
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || p != value.data() + value.size())
    throw ConfigError("config: bad integer for " + key + ": '" + value + "'");
  return out;
}

double to_f64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double out = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(value);
  while (std::getline(ss, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

}  // namespace

void RuntimeConfig::validate() const {
  if (window_ns <= 0) throw ConfigError("config: window_ns must be positive");
  if (hash_dim < 8) throw ConfigError("config: hash_dim must be at least 8");
  if (!(decay_beta > 0.0 && decay_beta <= 1.0))
    throw ConfigError("config: decay_beta must be in (0,1]");
  if (mem_dim <= 0 || emb_dim <= 0 || time_dim <= 0 || neighbor_cap <= 0)
    throw ConfigError("config: model dimensions must be positive");
  if (learn_rate < 0.0) throw ConfigError("config: learn_rate must be non-negative");
  if (grad_clip <= 0.0) throw ConfigError("config: grad_clip must be positive");
  if (sigma_stds < 0.0) throw ConfigError("config: sigma_stds must be non-negative");
  if (k_hop <= 0 || pseudo_cap < 0) throw ConfigError("config: bad rehearsal bounds");
  if (warmup_windows < 0) throw ConfigError("config: warmup_windows must be non-negative");
  if (walk_count <= 0 || walk_len <= 0) throw ConfigError("config: bad walk bounds");
  if (eval_graph_windows <= 0) throw ConfigError("config: eval_graph_windows must be positive");
}

void RuntimeConfig::set(const std::string& key, const std::string& value) {
  if (key == "window_ns") window_ns = to_i64(key, value);
  else if (key == "hash_dim") hash_dim = static_cast<int>(to_i64(key, value));
  else if (key == "decay_beta") decay_beta = to_f64(key, value);
  else if (key == "transfer_mode") {
    if (value == "literal") transfer_mode = TransferMode::Literal;
    else if (value == "strict_max") transfer_mode = TransferMode::StrictMax;
    else throw ConfigError("config: transfer_mode must be literal|strict_max");
  } else if (key == "whitelist") whitelist = split_list(value);
  else if (key == "mem_dim") mem_dim = static_cast<int>(to_i64(key, value));
  else if (key == "emb_dim") emb_dim = static_cast<int>(to_i64(key, value));
  else if (key == "time_dim") time_dim = static_cast<int>(to_i64(key, value));
  else if (key == "neighbor_cap") neighbor_cap = static_cast<int>(to_i64(key, value));
  else if (key == "learn_rate") learn_rate = to_f64(key, value);
  else if (key == "grad_clip") grad_clip = to_f64(key, value);
  else if (key == "attention") {
    if (value == "softmax") attention_softmax = true;
    else if (value == "sum") attention_softmax = false;
    else throw ConfigError("config: attention must be softmax|sum");
  } else if (key == "sigma_stds") sigma_stds = to_f64(key, value);
  else if (key == "gamma") gamma = to_f64(key, value);
  else if (key == "delta") delta = to_f64(key, value);
  else if (key == "k_hop") k_hop = static_cast<int>(to_i64(key, value));
  else if (key == "pseudo_cap") pseudo_cap = static_cast<int>(to_i64(key, value));
  else if (key == "pool_capacity") pool_capacity = static_cast<std::size_t>(to_i64(key, value));
  else if (key == "warmup_windows") warmup_windows = static_cast<int>(to_i64(key, value));
  else if (key == "walk_count") walk_count = static_cast<int>(to_i64(key, value));
  else if (key == "walk_len") walk_len = static_cast<int>(to_i64(key, value));
  else if (key == "eval_graph_windows") eval_graph_windows = static_cast<int>(to_i64(key, value));
  else if (key == "seed") seed = static_cast<std::uint64_t>(to_i64(key, value));
  else if (key == "ablate_pseudo_edges") ablate_pseudo_edges = to_bool(key, value);
  else if (key == "ablate_state_transfer") ablate_state_transfer = to_bool(key, value);
  else if (key == "ablate_path_filter") ablate_path_filter = to_bool(key, value);
  else throw ConfigError("config: unknown key '" + key + "'");
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) + " is not 'key = value'");
    out[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return out;
}

RuntimeConfig parse_config_text(const std::string& text, RuntimeConfig base) {
  for (const auto& [key, value] : parse_key_values(text)) base.set(key, value);
  base.validate();
  return base;
}

RuntimeConfig load_config_file(const std::filesystem::path& path, RuntimeConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), std::move(base));
}

void apply_env_overrides(RuntimeConfig& cfg) {
  static const char* keys[] = {
      "window_ns", "hash_dim", "decay_beta", "transfer_mode", "whitelist", "mem_dim",
      "emb_dim", "time_dim", "neighbor_cap", "learn_rate", "grad_clip", "attention",
      "sigma_stds", "gamma", "delta", "k_hop", "pseudo_cap", "pool_capacity",
      "warmup_windows", "walk_count", "walk_len", "eval_graph_windows", "seed", "ablate_pseudo_edges",
      "ablate_state_transfer", "ablate_path_filter"};
  for (const char* key : keys) {
    std::string env = "DRIFTWATCH_";
    for (const char* p = key; *p; ++p) env += static_cast<char>(std::toupper(*p));
    if (const char* v = std::getenv(env.c_str())) cfg.set(key, v);
  }
  cfg.validate();
}

}  // namespace driftwatch
