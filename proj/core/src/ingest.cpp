#include "driftwatch/ingest.hpp"

#include <json.hpp>

#include <istream>
#include <map>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace driftwatch {

using nlohmann::json;

std::string_view to_string(ParseErrorCode code) {
  switch (code) {
    case ParseErrorCode::BadJson: return "bad_json";
    case ParseErrorCode::MissingKey: return "missing_key";
    case ParseErrorCode::UnknownEventType: return "unknown_event_type";
    case ParseErrorCode::UnknownEntityKind: return "unknown_entity_kind";
    case ParseErrorCode::BadTimestamp: return "bad_timestamp";
    case ParseErrorCode::SubjectNotProcess: return "subject_not_process";
  }
  return "?";
}

namespace {

const char* kRequiredKeys[] = {"subject_uuid", "object_uuid",  "subject_kind", "object_kind",
                               "event_type",   "timestamp_ns", "subject_attr", "object_attr"};

}  // namespace

ParseResult parse_stream(std::istream& in, EntityStore& store, const RuntimeConfig& cfg) {
  ParseResult out;
  std::string line;
  std::size_t line_no = 0;
  std::uint64_t seq = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
      out.errors.push_back({line_no, ParseErrorCode::BadJson, "not a JSON object"});
      continue;
    }
    const char* missing = nullptr;
    for (const char* key : kRequiredKeys) {
      if (!j.contains(key)) {
        missing = key;
        break;
      }
    }
    if (missing) {
      out.errors.push_back({line_no, ParseErrorCode::MissingKey, missing});
      continue;
    }
    bool strings_ok = j["subject_uuid"].is_string() && j["object_uuid"].is_string() &&
                      j["subject_kind"].is_string() && j["object_kind"].is_string() &&
                      j["event_type"].is_string() && j["subject_attr"].is_string() &&
                      j["object_attr"].is_string();
    if (!strings_ok) {
      out.errors.push_back({line_no, ParseErrorCode::MissingKey, "non-string field"});
      continue;
    }
    if (!j["timestamp_ns"].is_number_integer()) {
      out.errors.push_back({line_no, ParseErrorCode::BadTimestamp, j["timestamp_ns"].dump()});
      continue;
    }
    auto event_kind = parse_event_kind(j["event_type"].get<std::string>());
    if (!event_kind) {
      out.errors.push_back({line_no, ParseErrorCode::UnknownEventType, j["event_type"]});
      continue;
    }
    auto subj_kind = parse_entity_kind(j["subject_kind"].get<std::string>());
    auto obj_kind = parse_entity_kind(j["object_kind"].get<std::string>());
    if (!subj_kind || !obj_kind) {
      out.errors.push_back(
          {line_no, ParseErrorCode::UnknownEntityKind, !subj_kind ? j["subject_kind"] : j["object_kind"]});
      continue;
    }
    if (*subj_kind != EntityKind::Process) {
      out.errors.push_back({line_no, ParseErrorCode::SubjectNotProcess, j["subject_uuid"]});
      continue;
    }
    Event e;
    e.subject = store.intern(j["subject_uuid"].get<std::string>(), *subj_kind,
                             j["subject_attr"].get<std::string>(), cfg.mem_dim);
    e.object = store.intern(j["object_uuid"].get<std::string>(), *obj_kind,
                            j["object_attr"].get<std::string>(), cfg.mem_dim);
    e.kind = *event_kind;
    e.timestamp_ns = j["timestamp_ns"].get<std::int64_t>();
    e.seq = seq++;
    out.events.push_back(e);
  }
  return out;
}

ParseResult parse_text(const std::string& text, EntityStore& store, const RuntimeConfig& cfg) {
  std::istringstream in(text);
  return parse_stream(in, store, cfg);
}

bool Whitelist::matches(std::string_view attribute) const {
  auto slash = attribute.rfind('/');
  std::string_view base =
      slash == std::string_view::npos ? attribute : attribute.substr(slash + 1);
  for (const auto& entry : entries) {
    if (entry.empty()) continue;
    if (base.find(entry) != std::string_view::npos) return true;
    if (attribute.size() >= entry.size() &&
        attribute.substr(attribute.size() - entry.size()) == entry)
      return true;
  }
  return false;
}

std::vector<Event> whitelist_filter(std::vector<Event> events, const Whitelist& wl,
                                    const EntityStore& store) {
  if (wl.entries.empty()) return events;
  std::vector<Event> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    bool read_only =
        e.kind == EventKind::Read || e.kind == EventKind::Mmap || e.kind == EventKind::Exec;
    if (read_only && wl.matches(store.rec(e.object).attribute)) continue;
    out.push_back(e);
  }
  return out;
}

std::vector<Event> cpr_reduce(std::vector<Event> events) {
  // Entity versions count informative deliveries into a node; a run of
  // identical (subject, object, kind) events merges while both endpoint
  // versions are unchanged since the kept representative, so no interleaving
  // event has changed either endpoint's information-flow frontier.
  std::unordered_map<EntityId, std::uint64_t> version;
  std::unordered_map<std::uint64_t, std::uint64_t> seen;  // (dst, src) -> delivered version
  std::map<std::tuple<EntityId, EntityId, std::uint8_t>, std::pair<std::uint64_t, std::uint64_t>>
      runs;

  auto ver = [&](EntityId id) -> std::uint64_t& {
    auto [it, inserted] = version.try_emplace(id, 1);
    return it->second;
  };
  auto pair_key = [](EntityId dst, EntityId src) {
    return (static_cast<std::uint64_t>(dst) << 32) | src;
  };

  std::vector<Event> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    auto [src, dst] = flow_endpoints(e);
    auto key = std::tuple(e.subject, e.object, static_cast<std::uint8_t>(e.kind));
    auto run = runs.find(key);
    if (run != runs.end() && run->second == std::pair(ver(src), ver(dst))) continue;

    out.push_back(e);
    if (src != dst) {
      auto& delivered = seen[pair_key(dst, src)];
      if (delivered < ver(src)) {
        delivered = ver(src);
        ++ver(dst);
      }
    }
    runs[key] = {ver(src), ver(dst)};
  }
  return out;
}

}  // namespace driftwatch
