#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>

#include "json.hpp"

#include "aml/txgen/transaction.hpp"

namespace aml::streamproc {

using txgen::Transaction;

struct Alert {
    std::uint64_t transaction_id = 0;
    std::string source;  // "rule:<name>" or "v<model version>"
    double score = 0.0;
    std::string reason;
    std::uint64_t emit_tick = 0;
    std::uint64_t ingest_tick = 0;
    std::uint64_t latency = 0;
    std::string payment_type;
    int day = 1;
    int partition = 0;
    std::uint64_t offset = 0;

    bool operator==(const Alert&) const = default;
};

nlohmann::json to_json(const Alert& alert);
Alert alert_from_json(const nlohmann::json& j);

struct RuleConfig {
    bool high_risk_type = true;
    std::set<std::string> high_risk_types{"Cash Deposit", "Cash Withdrawal", "Cross-border"};
    bool currency_mismatch = true;
    bool velocity = true;
    std::uint32_t velocity_count = 5;      // K: fires above this many in the window
    std::uint64_t velocity_window = 1'000;  // W, in ticks of transaction time

    static RuleConfig all_disabled();
};

void apply_json(RuleConfig& config, const nlohmann::json& j);
nlohmann::json to_json(const RuleConfig& config);

/// Running statistics owned by one processing loop. Construct with the
/// velocity rule's window length.
///
/// Per-account windows hold transaction timestamps; a window of length W at
/// time t covers (t - W, t]. Per-partition watermarks make observe()
/// idempotent across replays of already-counted offsets.
class RollingStats {
public:
    explicit RollingStats(std::uint64_t window = 1'000) : window_(window) {}

    /// Counts `t` unless (partition, offset) is below the partition watermark.
    /// Returns false for a skipped replay.
    bool observe(const Transaction& t, int partition, std::uint64_t offset);
    void record_alert(const std::string& payment_type);

    /// Transactions of `account` with timestamp in (tick - W, tick].
    std::uint32_t window_count(std::uint64_t account, std::uint64_t tick) const;

    std::uint64_t seen(const std::string& payment_type) const;
    std::uint64_t alerts(const std::string& payment_type) const;
    /// alerts / seen for the type, 0 when unseen.
    double fraud_ratio(const std::string& payment_type) const;
    /// Share of observed transactions paid in `currency`.
    double currency_share(const std::string& currency) const;

    /// Transactions counted for `account` over the whole stream.
    std::uint64_t account_total(std::uint64_t account) const;
    /// Newest timestamp retained for `account`.
    std::optional<std::uint64_t> last_tick(std::uint64_t account) const;

    std::uint64_t total_observed() const noexcept { return total_; }
    std::uint64_t window_length() const noexcept { return window_; }

    /// Next unobserved offset per partition.
    const std::map<int, std::uint64_t>& watermarks() const noexcept { return watermarks_; }

    /// True when no account retains a timestamp outside the window ending
    /// at its newest entry.
    bool window_exact() const;

    nlohmann::json to_json() const;
    static RollingStats from_json(const nlohmann::json& j);

    bool operator==(const RollingStats&) const = default;

private:
    std::uint64_t window_;
    std::unordered_map<std::uint64_t, std::deque<std::uint64_t>> accounts_;
    std::map<std::string, std::uint64_t> seen_;
    std::map<std::string, std::uint64_t> alerts_;
    std::map<std::string, std::uint64_t> currencies_;
    std::unordered_map<std::uint64_t, std::uint64_t> account_totals_;
    std::map<int, std::uint64_t> watermarks_;
    std::uint64_t total_ = 0;
};

/// First matching rule in fixed order: high-risk type, currency mismatch,
/// velocity. The velocity count includes `t` itself on top of the stats.
/// Only transaction_id, source, score, reason and payment_type are set.
std::optional<Alert> apply_rules(const Transaction& t, const RollingStats& stats, const RuleConfig& rules);

}  // namespace aml::streamproc
