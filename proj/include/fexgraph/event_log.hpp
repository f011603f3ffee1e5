#pragma once

#include <cstdint>
#include <filesystem>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "fexgraph/payload.hpp"

namespace fexgraph {

// One logged user interaction. `payload` holds the encoded attribute map
// exactly as stored on disk.
struct BehaviorEvent {
  std::uint64_t event_id = 0;
  std::string event_name;
  std::int64_t timestamp_ms = 0;
  std::string payload;

  bool operator==(const BehaviorEvent&) const = default;
};

// Half-open window (start_ms, end_ms]: start exclusive, end inclusive.
struct TimeWindow {
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;

  bool valid() const { return start_ms < end_ms; }
  bool contains(std::int64_t ts) const { return ts > start_ms && ts <= end_ms; }
};

// Append-only single-file store of behavior events with an in-memory index
// of (event_name -> chronological positions), rebuilt on open by a full scan.
//
// On-disk record layout, little-endian:
//   u32 record length (bytes after this prefix)
//   u64 event_id
//   i64 timestamp_ms
//   u16 name length
//   name bytes
//   payload bytes
//
// Single writer, multiple concurrent readers. Queries snapshot the index
// under a shared lock, so they never observe events appended after the call
// began. A truncated tail (torn final record) is discarded on open.
struct EventLogOptions {
  bool validate_payloads = true;
};

class EventLog {
 public:
  using Options = EventLogOptions;

  static EventLog open(const std::filesystem::path& path, Options options = Options{});

  EventLog(EventLog&& other) noexcept;
  EventLog& operator=(EventLog&& other) noexcept;
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;
  ~EventLog();

  // Appends one event. Timestamps must be non-decreasing in append order;
  // violations raise OutOfOrderTimestamp. Returns the assigned event_id
  // (previous max + 1, starting at 1).
  std::uint64_t append(const std::string& event_name, std::int64_t timestamp_ms,
                       std::string_view payload);

  // All events with the given name and timestamp in (start, end], ascending
  // by (timestamp_ms, event_id).
  std::vector<BehaviorEvent> query(const std::string& event_name, TimeWindow window) const;

  // Events strictly after the position (after_ts_ms, after_event_id) with
  // timestamp <= end_ms. Same ordering as query.
  std::vector<BehaviorEvent> query_since(const std::string& event_name, std::int64_t after_ts_ms,
                                         std::uint64_t after_event_id, std::int64_t end_ms) const;

  // Number of matching events in the window; index-only, no payload I/O.
  std::size_t count_in_window(const std::string& event_name, TimeWindow window) const;

  std::uint64_t event_count() const;
  std::uint64_t max_event_id() const;
  std::int64_t last_timestamp_ms() const;  // INT64_MIN when empty

  const std::filesystem::path& path() const { return path_; }

 private:
  struct IndexEntry {
    std::uint64_t event_id;
    std::int64_t timestamp_ms;
    std::uint64_t payload_offset;  // absolute file offset of payload bytes
    std::uint32_t payload_len;
  };

  EventLog() = default;

  void scan_existing(bool validate);
  std::vector<BehaviorEvent> read_entries(const std::string& name,
                                          const std::vector<IndexEntry>& entries) const;

  std::filesystem::path path_;
  Options options_;
  int fd_ = -1;
  std::uint64_t end_offset_ = 0;

  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::vector<IndexEntry>> index_;
  std::uint64_t next_event_id_ = 1;
  std::int64_t last_timestamp_ms_ = INT64_MIN;
  std::uint64_t total_events_ = 0;
};

}  // namespace fexgraph
