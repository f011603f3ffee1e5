#include "fexgraph/event_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <limits>
#include <mutex>

#include "fexgraph/errors.hpp"

namespace fexgraph {

namespace {

constexpr std::uint32_t kMaxRecordLen = 64u << 20;
constexpr std::size_t kHeaderLen = 4;  // u32 length prefix

void put_u32(char* dst, std::uint32_t v) { std::memcpy(dst, &v, 4); }
void put_u64(char* dst, std::uint64_t v) { std::memcpy(dst, &v, 8); }
void put_i64(char* dst, std::int64_t v) { std::memcpy(dst, &v, 8); }
void put_u16(char* dst, std::uint16_t v) { std::memcpy(dst, &v, 2); }

std::uint32_t get_u32(const char* src) { std::uint32_t v; std::memcpy(&v, src, 4); return v; }
std::uint64_t get_u64(const char* src) { std::uint64_t v; std::memcpy(&v, src, 8); return v; }
std::int64_t get_i64(const char* src) { std::int64_t v; std::memcpy(&v, src, 8); return v; }
std::uint16_t get_u16(const char* src) { std::uint16_t v; std::memcpy(&v, src, 2); return v; }

void pread_exact(int fd, char* buf, std::size_t len, std::uint64_t offset) {
  std::size_t done = 0;
  while (done < len) {
    ssize_t n = ::pread(fd, buf + done, len - done, static_cast<off_t>(offset + done));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_error(Errc::storage_failure, std::string("pread: ") + std::strerror(errno));
    }
    if (n == 0) throw_error(Errc::storage_failure, "unexpected end of log file");
    done += static_cast<std::size_t>(n);
  }
}

void pwrite_exact(int fd, const char* buf, std::size_t len, std::uint64_t offset) {
  std::size_t done = 0;
  while (done < len) {
    ssize_t n = ::pwrite(fd, buf + done, len - done, static_cast<off_t>(offset + done));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_error(Errc::storage_failure, std::string("pwrite: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

}  // namespace

EventLog EventLog::open(const std::filesystem::path& path, Options options) {
  EventLog log;
  log.path_ = path;
  log.options_ = options;
  log.fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (log.fd_ < 0) {
    throw_error(Errc::storage_failure, "cannot open " + path.string() + ": " + std::strerror(errno));
  }
  log.scan_existing(options.validate_payloads);
  return log;
}

EventLog::EventLog(EventLog&& other) noexcept { *this = std::move(other); }

EventLog& EventLog::operator=(EventLog&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    path_ = std::move(other.path_);
    options_ = other.options_;
    fd_ = other.fd_;
    end_offset_ = other.end_offset_;
    index_ = std::move(other.index_);
    next_event_id_ = other.next_event_id_;
    last_timestamp_ms_ = other.last_timestamp_ms_;
    total_events_ = other.total_events_;
    other.fd_ = -1;
  }
  return *this;
}

EventLog::~EventLog() {
  if (fd_ >= 0) ::close(fd_);
}

void EventLog::scan_existing(bool validate) {
  off_t file_size = ::lseek(fd_, 0, SEEK_END);
  if (file_size < 0) throw_error(Errc::storage_failure, "lseek failed");

  std::uint64_t offset = 0;
  std::vector<char> buf;
  while (offset + kHeaderLen <= static_cast<std::uint64_t>(file_size)) {
    char header[kHeaderLen];
    pread_exact(fd_, header, kHeaderLen, offset);
    std::uint32_t record_len = get_u32(header);
    if (record_len < 18 || record_len > kMaxRecordLen) break;  // torn or garbage tail
    if (offset + kHeaderLen + record_len > static_cast<std::uint64_t>(file_size)) break;

    buf.resize(record_len);
    pread_exact(fd_, buf.data(), record_len, offset + kHeaderLen);
    std::uint64_t event_id = get_u64(buf.data());
    std::int64_t ts = get_i64(buf.data() + 8);
    std::uint16_t name_len = get_u16(buf.data() + 16);
    if (18u + name_len > record_len) break;
    std::string name(buf.data() + 18, name_len);
    std::uint32_t payload_len = record_len - 18 - name_len;

    if (event_id != next_event_id_ || ts < last_timestamp_ms_) {
      throw_error(Errc::storage_failure, "log corrupted at offset " + std::to_string(offset));
    }
    if (validate) {
      decode_payload(std::string_view(buf.data() + 18 + name_len, payload_len));
    }

    index_[name].push_back(IndexEntry{event_id, ts, offset + kHeaderLen + 18 + name_len, payload_len});
    next_event_id_ = event_id + 1;
    last_timestamp_ms_ = ts;
    ++total_events_;
    offset += kHeaderLen + record_len;
  }
  end_offset_ = offset;  // torn tail, if any, is overwritten by the next append
}

std::uint64_t EventLog::append(const std::string& event_name, std::int64_t timestamp_ms,
                               std::string_view payload) {
  if (event_name.empty()) throw_error(Errc::invalid_argument, "event_name must be non-empty");
  if (event_name.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw_error(Errc::invalid_argument, "event_name too long");
  }
  if (payload.size() > kMaxRecordLen - 18 - event_name.size()) {
    throw_error(Errc::invalid_argument, "payload too large");
  }
  if (timestamp_ms < last_timestamp_ms_) {
    throw_error(Errc::out_of_order_timestamp,
                "append at " + std::to_string(timestamp_ms) + " before log head " +
                    std::to_string(last_timestamp_ms_));
  }
  if (options_.validate_payloads) decode_payload(payload);

  std::uint64_t event_id = next_event_id_;
  std::uint32_t record_len =
      static_cast<std::uint32_t>(18 + event_name.size() + payload.size());
  std::vector<char> buf(kHeaderLen + record_len);
  put_u32(buf.data(), record_len);
  put_u64(buf.data() + 4, event_id);
  put_i64(buf.data() + 12, timestamp_ms);
  put_u16(buf.data() + 20, static_cast<std::uint16_t>(event_name.size()));
  std::memcpy(buf.data() + 22, event_name.data(), event_name.size());
  std::memcpy(buf.data() + 22 + event_name.size(), payload.data(), payload.size());

  pwrite_exact(fd_, buf.data(), buf.size(), end_offset_);

  // Publish to the index only after the record is fully on disk, so a
  // concurrent reader can never see a half-written entry.
  {
    std::unique_lock lock(mutex_);
    index_[event_name].push_back(IndexEntry{
        event_id, timestamp_ms, end_offset_ + kHeaderLen + 18 + event_name.size(),
        static_cast<std::uint32_t>(payload.size())});
    end_offset_ += buf.size();
    next_event_id_ = event_id + 1;
    last_timestamp_ms_ = timestamp_ms;
    ++total_events_;
  }
  return event_id;
}

std::vector<BehaviorEvent> EventLog::read_entries(const std::string& name,
                                                  const std::vector<IndexEntry>& entries) const {
  std::vector<BehaviorEvent> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    BehaviorEvent ev;
    ev.event_id = e.event_id;
    ev.event_name = name;
    ev.timestamp_ms = e.timestamp_ms;
    ev.payload.resize(e.payload_len);
    if (e.payload_len > 0) pread_exact(fd_, ev.payload.data(), e.payload_len, e.payload_offset);
    out.push_back(std::move(ev));
  }
  return out;
}

std::vector<BehaviorEvent> EventLog::query(const std::string& event_name, TimeWindow window) const {
  if (!window.valid()) throw_error(Errc::invalid_argument, "invalid time window");
  std::vector<IndexEntry> snapshot;
  {
    std::shared_lock lock(mutex_);
    auto it = index_.find(event_name);
    if (it != index_.end()) {
      const auto& v = it->second;
      auto lo = std::partition_point(v.begin(), v.end(), [&](const IndexEntry& e) {
        return e.timestamp_ms <= window.start_ms;
      });
      auto hi = std::partition_point(lo, v.end(), [&](const IndexEntry& e) {
        return e.timestamp_ms <= window.end_ms;
      });
      snapshot.assign(lo, hi);
    }
  }
  return read_entries(event_name, snapshot);
}

std::vector<BehaviorEvent> EventLog::query_since(const std::string& event_name,
                                                 std::int64_t after_ts_ms,
                                                 std::uint64_t after_event_id,
                                                 std::int64_t end_ms) const {
  std::vector<IndexEntry> snapshot;
  {
    std::shared_lock lock(mutex_);
    auto it = index_.find(event_name);
    if (it != index_.end()) {
      const auto& v = it->second;
      auto lo = std::partition_point(v.begin(), v.end(), [&](const IndexEntry& e) {
        return e.timestamp_ms < after_ts_ms ||
               (e.timestamp_ms == after_ts_ms && e.event_id <= after_event_id);
      });
      auto hi = std::partition_point(lo, v.end(), [&](const IndexEntry& e) {
        return e.timestamp_ms <= end_ms;
      });
      snapshot.assign(lo, hi);
    }
  }
  return read_entries(event_name, snapshot);
}

std::size_t EventLog::count_in_window(const std::string& event_name, TimeWindow window) const {
  if (!window.valid()) throw_error(Errc::invalid_argument, "invalid time window");
  std::shared_lock lock(mutex_);
  auto it = index_.find(event_name);
  if (it == index_.end()) return 0;
  const auto& v = it->second;
  auto lo = std::partition_point(v.begin(), v.end(), [&](const IndexEntry& e) {
    return e.timestamp_ms <= window.start_ms;
  });
  auto hi = std::partition_point(lo, v.end(), [&](const IndexEntry& e) {
    return e.timestamp_ms <= window.end_ms;
  });
  return static_cast<std::size_t>(hi - lo);
}

std::uint64_t EventLog::event_count() const {
  std::shared_lock lock(mutex_);
  return total_events_;
}

std::uint64_t EventLog::max_event_id() const {
  std::shared_lock lock(mutex_);
  return next_event_id_ - 1;
}

std::int64_t EventLog::last_timestamp_ms() const {
  std::shared_lock lock(mutex_);
  return last_timestamp_ms_;
}

}  // namespace fexgraph
