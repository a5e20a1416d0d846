#include "aml/eventlog/event_log.hpp"

#include <algorithm>
#include <cstring>

#include <fmt/format.h>

#include "json.hpp"

#include "aml/common/error.hpp"
#include "aml/common/hash.hpp"

namespace aml::eventlog {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kHeaderBytes = 4 + 4 + 2;

void put_u16(std::string& out, std::uint16_t v) {
    out += static_cast<char>(v & 0xff);
    out += static_cast<char>((v >> 8) & 0xff);
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint64_t get_le(std::string_view bytes, std::size_t pos, int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    }
    return v;
}

bool valid_topic_name(std::string_view name) {
    if (name.empty() || name == "." || name == "..") return false;
    return std::all_of(name.begin(), name.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
               c == '_' || c == '.';
    });
}

fs::path segment_path(const fs::path& dir, std::uint64_t base, std::string_view ext) {
    return dir / fmt::format("{:020d}{}", base, ext);
}

std::vector<std::uint64_t> list_segments(const fs::path& dir) {
    std::vector<std::uint64_t> bases;
    if (!fs::exists(dir)) return bases;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".log") continue;
        bases.push_back(std::stoull(entry.path().stem().string()));
    }
    std::sort(bases.begin(), bases.end());
    return bases;
}

}  // namespace

int partition_for_key(std::string_view key, int partition_count) noexcept {
    return static_cast<int>(fnv1a64(key) % static_cast<std::uint64_t>(partition_count));
}

std::string encode_segment_record(std::string_view key, std::string_view payload) {
    if (key.size() > 0xffff) throw Error(Errc::invalid_input, "record key longer than 65535 bytes");
    if (payload.size() > 0xffffffffULL) throw Error(Errc::invalid_input, "record payload too large");
    std::string out;
    out.reserve(kHeaderBytes + key.size() + payload.size());
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    put_u32(out, crc32_of(key, payload));
    put_u16(out, static_cast<std::uint16_t>(key.size()));
    out.append(key);
    out.append(payload);
    return out;
}

EventLog::EventLog(fs::path root, LogOptions options) : root_(std::move(root)), options_(options) {
    if (options_.segment_records == 0) throw Error(Errc::config, "segment_records must be positive");
    ensure_directory(root_);
    for (const auto& entry : fs::directory_iterator(root_)) {
        if (entry.is_directory() && fs::exists(entry.path() / "topic.json")) load_topic(entry.path());
    }
}

EventLog::~EventLog() = default;

void EventLog::load_topic(const fs::path& dir) {
    json meta = json::parse(read_file(dir / "topic.json"), nullptr, false);
    if (meta.is_discarded() || !meta.contains("name") || !meta.contains("partitions")) {
        throw Error(Errc::data, fmt::format("corrupt topic metadata in '{}'", dir.string()));
    }
    auto state = std::make_unique<TopicState>();
    state->topic = Topic{meta["name"].get<std::string>(), meta["partitions"].get<int>()};
    state->dir = dir;
    for (int p = 0; p < state->topic.partition_count; ++p) {
        auto partition = std::make_unique<Partition>();
        partition->dir = dir / fmt::format("partition-{}", p);
        recover_partition(*partition);
        for (const auto& r : partition->records) {
            std::uint64_t expected = next_tick_.load();
            while (r.tick + 1 > expected && !next_tick_.compare_exchange_weak(expected, r.tick + 1)) {
            }
        }
        state->partitions.push_back(std::move(partition));
    }
    const fs::path consumers = dir / "consumers.json";
    if (fs::exists(consumers)) {
        json doc = json::parse(read_file(consumers), nullptr, false);
        if (doc.is_discarded()) throw Error(Errc::data, fmt::format("corrupt '{}'", consumers.string()));
        for (const auto& [group, positions] : doc.items()) {
            for (const auto& [partition, offset] : positions.items()) {
                state->consumers[group][std::stoi(partition)] = offset.get<std::uint64_t>();
            }
        }
    }
    topics_[state->topic.name] = std::move(state);
}

void EventLog::recover_partition(Partition& partition) {
    ensure_directory(partition.dir);
    const auto bases = list_segments(partition.dir);
    bool truncated = false;
    for (std::uint64_t base : bases) {
        const fs::path log_path = segment_path(partition.dir, base, ".log");
        const fs::path tick_path = segment_path(partition.dir, base, ".ticks");
        if (truncated || base != partition.records.size()) {
            // A gap or an earlier torn segment: nothing after it was acknowledged.
            fs::remove(log_path);
            fs::remove(tick_path);
            truncated = true;
            continue;
        }
        const std::string bytes = read_file(log_path);
        const std::string ticks = fs::exists(tick_path) ? read_file(tick_path) : std::string{};
        const std::size_t tick_count = ticks.size() / 8;

        std::size_t pos = 0;
        std::size_t kept = 0;
        while (pos + kHeaderBytes <= bytes.size() && kept < tick_count) {
            const auto payload_len = get_le(bytes, pos, 4);
            const auto crc = static_cast<std::uint32_t>(get_le(bytes, pos + 4, 4));
            const auto key_len = get_le(bytes, pos + 8, 2);
            const std::size_t end = pos + kHeaderBytes + key_len + payload_len;
            if (end > bytes.size()) break;
            std::string_view key(bytes.data() + pos + kHeaderBytes, key_len);
            std::string_view payload(bytes.data() + pos + kHeaderBytes + key_len, payload_len);
            if (crc32_of(key, payload) != crc) break;
            partition.records.push_back({std::string(key), std::string(payload), get_le(ticks, kept * 8, 8)});
            ++kept;
            pos = end;
        }
        if (pos != bytes.size() || kept * 8 != ticks.size()) {
            fs::resize_file(log_path, pos);
            if (fs::exists(tick_path)) fs::resize_file(tick_path, kept * 8);
            truncated = pos != bytes.size();
        }
        partition.segment_base = base;
    }
    open_segment(partition, bases.empty() || partition.records.empty() ? 0 : partition.segment_base);
}

void EventLog::open_segment(Partition& partition, std::uint64_t base) {
    partition.segment_base = base;
    partition.log_file = AppendFile(segment_path(partition.dir, base, ".log"));
    partition.tick_file = AppendFile(segment_path(partition.dir, base, ".ticks"));
}

Topic EventLog::create_topic(const std::string& name, int partitions) {
    if (!valid_topic_name(name)) {
        throw Error(Errc::invalid_input, fmt::format("invalid topic name '{}' (use [A-Za-z0-9._-])", name));
    }
    if (partitions < 1) throw Error(Errc::invalid_input, "partition count must be at least 1");
    std::unique_lock lock(topics_mutex_);
    if (topics_.contains(name)) throw Error(Errc::already_exists, fmt::format("topic '{}' already exists", name));

    auto state = std::make_unique<TopicState>();
    state->topic = Topic{name, partitions};
    state->dir = root_ / name;
    ensure_directory(state->dir);
    for (int p = 0; p < partitions; ++p) {
        auto partition = std::make_unique<Partition>();
        partition->dir = state->dir / fmt::format("partition-{}", p);
        ensure_directory(partition->dir);
        open_segment(*partition, 0);
        state->partitions.push_back(std::move(partition));
    }
    write_file_atomic(state->dir / "topic.json", json{{"name", name}, {"partitions", partitions}}.dump());
    Topic topic = state->topic;
    topics_[name] = std::move(state);
    return topic;
}

std::optional<Topic> EventLog::find_topic(std::string_view name) const {
    std::shared_lock lock(topics_mutex_);
    auto it = topics_.find(name);
    if (it == topics_.end()) return std::nullopt;
    return it->second->topic;
}

std::vector<Topic> EventLog::topics() const {
    std::shared_lock lock(topics_mutex_);
    std::vector<Topic> out;
    for (const auto& [name, state] : topics_) out.push_back(state->topic);
    return out;
}

EventLog::TopicState& EventLog::topic_state(std::string_view name) const {
    std::shared_lock lock(topics_mutex_);
    auto it = topics_.find(name);
    if (it == topics_.end()) throw Error(Errc::not_found, fmt::format("unknown topic '{}'", name));
    return *it->second;
}

PublishResult EventLog::publish(std::string_view topic, std::string_view key, std::string_view payload,
                                std::optional<std::uint64_t> ingest_tick) {
    TopicState& state = topic_state(topic);
    const int p = partition_for_key(key, state.topic.partition_count);
    Partition& partition = *state.partitions[p];
    const std::string record = encode_segment_record(key, payload);

    std::lock_guard lock(partition.mutex);
    std::uint64_t tick = 0;
    if (ingest_tick) {
        tick = *ingest_tick;
        if (!partition.records.empty() && tick < partition.records.back().tick) {
            throw Error(Errc::out_of_range,
                        fmt::format("ingest tick {} precedes partition tail tick {}", tick,
                                    partition.records.back().tick));
        }
        std::uint64_t expected = next_tick_.load();
        while (tick + 1 > expected && !next_tick_.compare_exchange_weak(expected, tick + 1)) {
        }
    } else {
        tick = next_tick_.fetch_add(1);
    }

    const std::uint64_t offset = partition.records.size();
    if (offset - partition.segment_base >= options_.segment_records) {
        partition.log_file.sync();
        partition.tick_file.sync();
        open_segment(partition, offset);
        partition.unsynced = 0;
    }
    std::string tick_bytes;
    put_u64(tick_bytes, tick);
    partition.tick_file.append(tick_bytes);
    partition.log_file.append(record);
    partition.records.push_back({std::string(key), std::string(payload), tick});
    if (++partition.unsynced >= options_.fsync_every) {
        partition.tick_file.sync();
        partition.log_file.sync();
        partition.unsynced = 0;
    }
    return PublishResult{p, offset};
}

std::uint64_t EventLog::next_offset_locked(const TopicState& state, std::string_view group, int partition) const {
    auto git = state.consumers.find(group);
    if (git == state.consumers.end()) return 0;
    auto pit = git->second.find(partition);
    return pit == git->second.end() ? 0 : pit->second + 1;
}

std::vector<LogRecord> EventLog::poll(std::string_view group, std::string_view topic, std::size_t max_records,
                                      std::optional<std::uint64_t> visible_until) const {
    const TopicState& state = topic_state(topic);
    const int partitions = state.topic.partition_count;

    std::vector<std::uint64_t> starts(partitions);
    {
        std::lock_guard lock(state.consumers_mutex);
        for (int p = 0; p < partitions; ++p) starts[p] = next_offset_locked(state, group, p);
    }

    // Candidate window per partition, then a k-way merge by (tick, partition).
    std::vector<std::vector<LogRecord>> candidates(partitions);
    for (int p = 0; p < partitions; ++p) {
        const Partition& partition = *state.partitions[p];
        std::lock_guard lock(partition.mutex);
        const std::uint64_t end = std::min<std::uint64_t>(partition.records.size(), starts[p] + max_records);
        for (std::uint64_t off = starts[p]; off < end; ++off) {
            const StoredRecord& r = partition.records[off];
            if (visible_until && r.tick > *visible_until) break;
            candidates[p].push_back(LogRecord{std::string(topic), p, off, r.key, r.payload, r.tick});
        }
    }

    std::vector<LogRecord> batch;
    std::vector<std::size_t> heads(partitions, 0);
    while (batch.size() < max_records) {
        int best = -1;
        for (int p = 0; p < partitions; ++p) {
            if (heads[p] >= candidates[p].size()) continue;
            if (best < 0 || candidates[p][heads[p]].ingest_tick < candidates[best][heads[best]].ingest_tick) best = p;
        }
        if (best < 0) break;
        batch.push_back(std::move(candidates[best][heads[best]++]));
    }
    return batch;
}

void EventLog::commit(std::string_view group, std::string_view topic, int partition, std::uint64_t offset) {
    TopicState& state = topic_state(topic);
    if (partition < 0 || partition >= state.topic.partition_count) {
        throw Error(Errc::out_of_range, fmt::format("topic '{}' has no partition {}", topic, partition));
    }
    const std::uint64_t size = partition_size(topic, partition);
    if (offset >= size) {
        throw Error(Errc::out_of_range, fmt::format("commit offset {} beyond end of {}/{} (size {})", offset, topic,
                                                    partition, size));
    }
    std::lock_guard lock(state.consumers_mutex);
    state.consumers[std::string(group)][partition] = offset;
    persist_consumers(state);
}

void EventLog::persist_consumers(const TopicState& state) const {
    json doc = json::object();
    for (const auto& [group, positions] : state.consumers) {
        json entry = json::object();
        for (const auto& [partition, offset] : positions) entry[std::to_string(partition)] = offset;
        doc[group] = entry;
    }
    write_file_atomic(state.dir / "consumers.json", doc.dump());
}

std::optional<std::uint64_t> EventLog::committed(std::string_view group, std::string_view topic,
                                                 int partition) const {
    const TopicState& state = topic_state(topic);
    std::lock_guard lock(state.consumers_mutex);
    const std::uint64_t next = next_offset_locked(state, group, partition);
    if (next == 0) return std::nullopt;
    return next - 1;
}

std::uint64_t EventLog::next_offset(std::string_view group, std::string_view topic, int partition) const {
    const TopicState& state = topic_state(topic);
    std::lock_guard lock(state.consumers_mutex);
    return next_offset_locked(state, group, partition);
}

std::uint64_t EventLog::partition_size(std::string_view topic, int partition) const {
    const TopicState& state = topic_state(topic);
    if (partition < 0 || partition >= state.topic.partition_count) {
        throw Error(Errc::out_of_range, fmt::format("topic '{}' has no partition {}", topic, partition));
    }
    const Partition& part = *state.partitions[partition];
    std::lock_guard lock(part.mutex);
    return part.records.size();
}

std::uint64_t EventLog::topic_size(std::string_view topic) const {
    const TopicState& state = topic_state(topic);
    std::uint64_t total = 0;
    for (int p = 0; p < state.topic.partition_count; ++p) total += partition_size(topic, p);
    return total;
}

std::uint64_t EventLog::lag(std::string_view group, std::string_view topic) const {
    const TopicState& state = topic_state(topic);
    std::uint64_t total = 0;
    for (int p = 0; p < state.topic.partition_count; ++p) {
        total += partition_size(topic, p) - next_offset(group, topic, p);
    }
    return total;
}

std::optional<std::uint64_t> EventLog::earliest_pending_tick(std::string_view group, std::string_view topic) const {
    const TopicState& state = topic_state(topic);
    std::optional<std::uint64_t> earliest;
    for (int p = 0; p < state.topic.partition_count; ++p) {
        const std::uint64_t next = next_offset(group, topic, p);
        const Partition& partition = *state.partitions[p];
        std::lock_guard lock(partition.mutex);
        if (next < partition.records.size()) {
            const std::uint64_t tick = partition.records[next].tick;
            if (!earliest || tick < *earliest) earliest = tick;
        }
    }
    return earliest;
}

void EventLog::flush() {
    std::shared_lock lock(topics_mutex_);
    for (auto& [name, state] : topics_) {
        for (auto& partition : state->partitions) {
            std::lock_guard plock(partition->mutex);
            partition->tick_file.sync();
            partition->log_file.sync();
            partition->unsynced = 0;
        }
    }
}

}  // namespace aml::eventlog
