#include "driftwatch/scenario_export.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <sstream>

namespace driftwatch {

using nlohmann::json;

std::string alert_to_jsonl(const Alert& alert, const EntityStore& store,
                           const std::string& scenario_file) {
  json nodes = json::array();
  for (EntityId id : alert.malicious_nodes) nodes.push_back(store.rec(id).uuid);
  json line = {{"window_index", alert.window_index},
               {"malicious_nodes", nodes},
               {"path_count", alert.path_count},
               {"scenario_file", scenario_file},
               {"window_ids", alert.window_ids}};
  return line.dump();
}

std::string scenario_to_json(const ScenarioGraph& scenario, const EntityStore& store) {
  json nodes = json::array();
  auto sorted_nodes = scenario.nodes;
  std::sort(sorted_nodes.begin(), sorted_nodes.end(),
            [&](const ScenarioNode& a, const ScenarioNode& b) {
              return store.rec(a.id).uuid < store.rec(b.id).uuid;
            });
  for (const auto& n : sorted_nodes) {
    nodes.push_back({{"id", store.rec(n.id).uuid},
                     {"name", n.name},
                     {"kind", std::string(to_string(n.kind))},
                     {"ss", n.ss}});
  }
  auto sorted_edges = scenario.edges;
  std::sort(sorted_edges.begin(), sorted_edges.end(), [&](const MiniEdge& a, const MiniEdge& b) {
    auto ka = std::tuple(store.rec(a.src).uuid, store.rec(a.dst).uuid,
                         static_cast<int>(a.kind), a.window);
    auto kb = std::tuple(store.rec(b.src).uuid, store.rec(b.dst).uuid,
                         static_cast<int>(b.kind), b.window);
    return ka < kb;
  });
  json edges = json::array();
  for (const auto& e : sorted_edges) {
    edges.push_back({{"src", store.rec(e.src).uuid},
                     {"dst", store.rec(e.dst).uuid},
                     {"kind", std::string(to_string(e.kind))},
                     {"rl", e.rl},
                     {"window", e.window}});
  }
  json out = {{"window_ids", scenario.window_ids}, {"nodes", nodes}, {"edges", edges}};
  return out.dump(2) + "\n";
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string scenario_json_to_dot(const std::string& json_text, bool merge_names) {
  json j = json::parse(json_text);

  struct RenderNode {
    std::string name, kind;
    double ss = 0.0;
    int count = 0;
  };
  std::map<std::string, RenderNode> nodes;        // render id -> node
  std::map<std::string, std::string> render_id;   // uuid -> render id

  for (const auto& n : j["nodes"]) {
    auto uuid = n["id"].get<std::string>();
    auto name = n["name"].get<std::string>();
    auto kind = n["kind"].get<std::string>();
    std::string rid = merge_names ? kind + ":" + name : uuid;
    render_id[uuid] = rid;
    auto [it, inserted] = nodes.try_emplace(rid, RenderNode{name, kind, 0.0, 0});
    it->second.ss = std::max(it->second.ss, n["ss"].get<double>());
    it->second.count += 1;
  }

  struct RenderEdge {
    std::string kind;
    double rl = 0.0;
    std::int64_t window = 0;
    int count = 0;
  };
  std::map<std::tuple<std::string, std::string, std::string>, RenderEdge> edges;
  for (const auto& e : j["edges"]) {
    auto src = render_id.at(e["src"].get<std::string>());
    auto dst = render_id.at(e["dst"].get<std::string>());
    auto kind = e["kind"].get<std::string>();
    auto key = std::tuple(src, dst, kind);
    auto [it, inserted] = edges.try_emplace(key);
    it->second.kind = kind;
    double rl = e["rl"].get<double>();
    if (inserted || rl > it->second.rl) {
      it->second.rl = rl;
      it->second.window = e["window"].get<std::int64_t>();
    }
    it->second.count += 1;
  }

  std::ostringstream out;
  out << "digraph scenario {\n";
  out << "  rankdir=LR;\n";
  out << "  node [fontsize=10];\n";
  for (const auto& [rid, n] : nodes) {
    const char* shape = n.kind == "PROCESS" ? "box" : (n.kind == "SOCKET" ? "diamond" : "ellipse");
    out << "  \"" << dot_escape(rid) << "\" [label=\"" << dot_escape(n.name);
    if (merge_names && n.count > 1) out << " (x" << n.count << ")";
    char ssbuf[32];
    std::snprintf(ssbuf, sizeof(ssbuf), "%.3f", n.ss);
    out << "\\n" << n.kind << " ss=" << ssbuf << "\" shape=" << shape << "];\n";
  }
  for (const auto& [key, e] : edges) {
    char rlbuf[32];
    std::snprintf(rlbuf, sizeof(rlbuf), "%.3f", e.rl);
    out << "  \"" << dot_escape(std::get<0>(key)) << "\" -> \"" << dot_escape(std::get<1>(key))
        << "\" [label=\"" << e.kind << " w" << e.window << " rl=" << rlbuf;
    if (e.count > 1) out << " (x" << e.count << ")";
    out << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace driftwatch
