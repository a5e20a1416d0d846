#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "aml/common/files.hpp"

namespace aml::eventlog {

struct Topic {
    std::string name;
    int partition_count = 0;

    bool operator==(const Topic&) const = default;
};

struct LogRecord {
    std::string topic;
    int partition = 0;
    std::uint64_t offset = 0;
    std::string key;
    std::string payload;
    std::uint64_t ingest_tick = 0;

    bool operator==(const LogRecord&) const = default;
};

struct PublishResult {
    int partition = 0;
    std::uint64_t offset = 0;
};

struct LogOptions {
    /// fdatasync after this many appends to a partition; flush() forces it.
    std::uint32_t fsync_every = 256;
    /// Records per segment file before rolling to a new one.
    std::uint64_t segment_records = 65'536;
};

/// Partition chosen for `key`: FNV-1a 64 of the key bytes, modulo count.
int partition_for_key(std::string_view key, int partition_count) noexcept;

/// Encodes one record in the on-disk segment format:
/// [u32 LE payload length][u32 LE CRC-32 of key||payload][u16 LE key length][key][payload].
std::string encode_segment_record(std::string_view key, std::string_view payload);

/// Embedded partitioned append-only log with consumer-group offsets.
///
/// Layout under `root`:
///   <topic>/topic.json                      {"name", "partitions"}
///   <topic>/partition-<k>/<base>.log        segment records (format above)
///   <topic>/partition-<k>/<base>.ticks      u64 LE ingest tick per record
///   <topic>/consumers.json                  {"<group>": {"<partition>": last consumed offset}}
///
/// Opening a directory recovers every topic, truncating any torn tail left
/// by an interrupted append. Thread-safe: appends to one partition are
/// serialized, polls read a consistent prefix.
class EventLog {
public:
    explicit EventLog(std::filesystem::path root, LogOptions options = {});
    ~EventLog();

    EventLog(const EventLog&) = delete;
    EventLog& operator=(const EventLog&) = delete;

    Topic create_topic(const std::string& name, int partitions);
    std::optional<Topic> find_topic(std::string_view name) const;
    std::vector<Topic> topics() const;

    /// Appends to partition_for_key(key). `ingest_tick` defaults to the log
    /// clock; an explicit tick must not precede the partition's last tick.
    PublishResult publish(std::string_view topic, std::string_view key, std::string_view payload,
                          std::optional<std::uint64_t> ingest_tick = std::nullopt);

    /// Up to `max_records` records past the group's committed positions, merged
    /// across partitions by ingest tick (per-partition offset order is kept).
    /// Records with ingest_tick > `visible_until` are not returned. Does not
    /// move committed positions.
    std::vector<LogRecord> poll(std::string_view group, std::string_view topic, std::size_t max_records,
                                std::optional<std::uint64_t> visible_until = std::nullopt) const;

    /// Marks `offset` (and everything before it) consumed by `group`.
    /// Durable before return.
    void commit(std::string_view group, std::string_view topic, int partition, std::uint64_t offset);

    /// Last committed offset, if any.
    std::optional<std::uint64_t> committed(std::string_view group, std::string_view topic, int partition) const;

    /// Offset the next poll of `group` starts from.
    std::uint64_t next_offset(std::string_view group, std::string_view topic, int partition) const;

    std::uint64_t partition_size(std::string_view topic, int partition) const;
    std::uint64_t topic_size(std::string_view topic) const;

    /// Records not yet committed by `group`.
    std::uint64_t lag(std::string_view group, std::string_view topic) const;

    /// Smallest ingest tick among records `group` has not consumed.
    std::optional<std::uint64_t> earliest_pending_tick(std::string_view group, std::string_view topic) const;

    /// Forces outstanding appends to stable storage.
    void flush();

    /// Next tick the clock would assign.
    std::uint64_t clock() const noexcept { return next_tick_.load(); }

    const std::filesystem::path& root() const noexcept { return root_; }

private:
    struct StoredRecord {
        std::string key;
        std::string payload;
        std::uint64_t tick;
    };

    struct Partition {
        mutable std::mutex mutex;
        std::filesystem::path dir;
        std::vector<StoredRecord> records;
        std::uint64_t segment_base = 0;
        AppendFile log_file;
        AppendFile tick_file;
        std::uint32_t unsynced = 0;
    };

    struct TopicState {
        Topic topic;
        std::filesystem::path dir;
        std::vector<std::unique_ptr<Partition>> partitions;
        mutable std::mutex consumers_mutex;
        std::map<std::string, std::map<int, std::uint64_t>, std::less<>> consumers;
    };

    TopicState& topic_state(std::string_view name) const;
    void load_topic(const std::filesystem::path& dir);
    void recover_partition(Partition& partition);
    void open_segment(Partition& partition, std::uint64_t base);
    void persist_consumers(const TopicState& state) const;
    std::uint64_t next_offset_locked(const TopicState& state, std::string_view group, int partition) const;

    std::filesystem::path root_;
    LogOptions options_;
    mutable std::shared_mutex topics_mutex_;
    std::map<std::string, std::unique_ptr<TopicState>, std::less<>> topics_;
    std::atomic<std::uint64_t> next_tick_{0};
};

}  // namespace aml::eventlog
