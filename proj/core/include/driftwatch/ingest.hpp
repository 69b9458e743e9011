#pragma once

#include "driftwatch/config.hpp"
#include "driftwatch/types.hpp"

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace driftwatch {

enum class ParseErrorCode : std::uint8_t {
  BadJson,
  MissingKey,
  UnknownEventType,
  UnknownEntityKind,
  BadTimestamp,
  SubjectNotProcess,
};

std::string_view to_string(ParseErrorCode code);

struct ParseError {
  std::size_t line_no = 0;  // 1-based
  ParseErrorCode code = ParseErrorCode::BadJson;
  std::string detail;
};

struct ParseResult {
  std::vector<Event> events;  // in input order, seq assigned from line number
  std::vector<ParseError> errors;
};

// Parses JSONL audit lines with keys subject_uuid, object_uuid, subject_kind,
// object_kind, event_type, timestamp_ns, subject_attr, object_attr. Entities
// are interned into `store`. Malformed lines produce ParseErrors and the
// stream continues.
ParseResult parse_stream(std::istream& in, EntityStore& store, const RuntimeConfig& cfg);
ParseResult parse_text(const std::string& text, EntityStore& store, const RuntimeConfig& cfg);

struct Whitelist {
  std::vector<std::string> entries;
  // Suffix / basename-substring match against an object attribute.
  bool matches(std::string_view attribute) const;
};

// Drops read-only library initialization events: kind in {Read, Mmap, Exec}
// and object attribute matching the whitelist. Order of survivors unchanged.
std::vector<Event> whitelist_filter(std::vector<Event> events, const Whitelist& wl,
                                    const EntityStore& store);

// Causality-preserving reduction. Consecutive events with the same
// (subject, object, kind) merge into the earliest one as long as no
// interleaving event changed the information content of the run's flow
// source; pairwise information-flow reachability is preserved. Input must be
// sorted by (timestamp, seq).
std::vector<Event> cpr_reduce(std::vector<Event> events);

// Window index of a timestamp for a stream whose first event is at origin_ns.
inline std::int64_t window_index_of(std::int64_t ts_ns, std::int64_t origin_ns,
                                    std::int64_t window_ns) {
  return (ts_ns - origin_ns) / window_ns;
}

}  // namespace driftwatch
