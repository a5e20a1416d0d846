#include "aml/streamproc/rules.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "aml/common/error.hpp"

namespace aml::streamproc {

using nlohmann::json;

json to_json(const Alert& a) {
    return nlohmann::ordered_json{{"transaction_id", a.transaction_id},
                                  {"source", a.source},
                                  {"score", a.score},
                                  {"reason", a.reason},
                                  {"emit_tick", a.emit_tick},
                                  {"ingest_tick", a.ingest_tick},
                                  {"latency", a.latency},
                                  {"payment_type", a.payment_type},
                                  {"day", a.day},
                                  {"partition", a.partition},
                                  {"offset", a.offset}};
}

Alert alert_from_json(const json& j) {
    try {
        Alert a;
        a.transaction_id = j.at("transaction_id").get<std::uint64_t>();
        a.source = j.at("source").get<std::string>();
        a.score = j.at("score").get<double>();
        a.reason = j.at("reason").get<std::string>();
        a.emit_tick = j.at("emit_tick").get<std::uint64_t>();
        a.ingest_tick = j.at("ingest_tick").get<std::uint64_t>();
        a.latency = j.at("latency").get<std::uint64_t>();
        a.payment_type = j.at("payment_type").get<std::string>();
        a.day = j.at("day").get<int>();
        a.partition = j.at("partition").get<int>();
        a.offset = j.at("offset").get<std::uint64_t>();
        return a;
    } catch (const json::exception& e) {
        throw Error(Errc::data, fmt::format("malformed alert: {}", e.what()));
    }
}

RuleConfig RuleConfig::all_disabled() {
    RuleConfig c;
    c.high_risk_type = false;
    c.currency_mismatch = false;
    c.velocity = false;
    return c;
}

void apply_json(RuleConfig& c, const json& j) {
    if (!j.is_object()) throw Error(Errc::config, "rules must be an object");
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "high_risk_type") c.high_risk_type = value.get<bool>();
            else if (key == "high_risk_types") c.high_risk_types = value.get<std::set<std::string>>();
            else if (key == "currency_mismatch") c.currency_mismatch = value.get<bool>();
            else if (key == "velocity") c.velocity = value.get<bool>();
            else if (key == "velocity_count") c.velocity_count = value.get<std::uint32_t>();
            else if (key == "velocity_window") c.velocity_window = value.get<std::uint64_t>();
            else throw Error(Errc::config, fmt::format("unknown rules key '{}'", key));
        } catch (const json::exception& e) {
            throw Error(Errc::config, fmt::format("rules.{}: {}", key, e.what()));
        }
    }
    if (c.velocity_window == 0) throw Error(Errc::config, "rules.velocity_window must be positive");
}

json to_json(const RuleConfig& c) {
    return json{{"high_risk_type", c.high_risk_type},
                {"high_risk_types", c.high_risk_types},
                {"currency_mismatch", c.currency_mismatch},
                {"velocity", c.velocity},
                {"velocity_count", c.velocity_count},
                {"velocity_window", c.velocity_window}};
}

bool RollingStats::observe(const Transaction& t, int partition, std::uint64_t offset) {
    auto& mark = watermarks_[partition];
    if (offset < mark) return false;
    mark = offset + 1;

    const auto tick = static_cast<std::uint64_t>(t.timestamp);
    auto& ticks = accounts_[t.sender_account];
    ticks.insert(std::upper_bound(ticks.begin(), ticks.end(), tick), tick);
    const std::uint64_t newest = ticks.back();
    while (!ticks.empty() && ticks.front() + window_ <= newest) ticks.pop_front();

    ++account_totals_[t.sender_account];
    ++seen_[t.payment_type];
    ++currencies_[t.payment_currency];
    ++total_;
    return true;
}

void RollingStats::record_alert(const std::string& payment_type) { ++alerts_[payment_type]; }

std::uint32_t RollingStats::window_count(std::uint64_t account, std::uint64_t tick) const {
    const auto it = accounts_.find(account);
    if (it == accounts_.end()) return 0;
    const auto& ticks = it->second;
    const auto hi = std::upper_bound(ticks.begin(), ticks.end(), tick);
    const auto lo = tick >= window_ ? std::upper_bound(ticks.begin(), hi, tick - window_) : ticks.begin();
    return static_cast<std::uint32_t>(hi - lo);
}

std::uint64_t RollingStats::account_total(std::uint64_t account) const {
    const auto it = account_totals_.find(account);
    return it == account_totals_.end() ? 0 : it->second;
}

std::optional<std::uint64_t> RollingStats::last_tick(std::uint64_t account) const {
    const auto it = accounts_.find(account);
    if (it == accounts_.end() || it->second.empty()) return std::nullopt;
    return it->second.back();
}

namespace {
std::uint64_t lookup(const std::map<std::string, std::uint64_t>& m, const std::string& key) {
    const auto it = m.find(key);
    return it == m.end() ? 0 : it->second;
}
}  // namespace

std::uint64_t RollingStats::seen(const std::string& type) const { return lookup(seen_, type); }
std::uint64_t RollingStats::alerts(const std::string& type) const { return lookup(alerts_, type); }

double RollingStats::fraud_ratio(const std::string& type) const {
    const auto n = seen(type);
    return n ? std::min(1.0, static_cast<double>(alerts(type)) / static_cast<double>(n)) : 0.0;
}

double RollingStats::currency_share(const std::string& currency) const {
    return total_ ? static_cast<double>(lookup(currencies_, currency)) / static_cast<double>(total_) : 0.0;
}

bool RollingStats::window_exact() const {
    for (const auto& [account, ticks] : accounts_) {
        if (!ticks.empty() && ticks.front() + window_ <= ticks.back()) return false;
        if (!std::is_sorted(ticks.begin(), ticks.end())) return false;
    }
    return true;
}

json RollingStats::to_json() const {
    std::map<std::uint64_t, const std::deque<std::uint64_t>*> ordered;
    for (const auto& [account, ticks] : accounts_) ordered.emplace(account, &ticks);
    json accounts = json::object();
    for (const auto& [account, ticks] : ordered) accounts[std::to_string(account)] = *ticks;
    const std::map<std::uint64_t, std::uint64_t> totals(account_totals_.begin(), account_totals_.end());
    json account_totals = json::object();
    for (const auto& [account, n] : totals) account_totals[std::to_string(account)] = n;
    json marks = json::object();
    for (const auto& [p, next] : watermarks_) marks[std::to_string(p)] = next;
    return json{{"window", window_},     {"accounts", accounts},     {"seen", seen_},
                {"alerts", alerts_},     {"currencies", currencies_}, {"watermarks", marks},
                {"total", total_},       {"account_totals", account_totals}};
}

RollingStats RollingStats::from_json(const json& j) {
    try {
        RollingStats s(j.at("window").get<std::uint64_t>());
        for (const auto& [account, ticks] : j.at("accounts").items()) {
            s.accounts_[std::stoull(account)] = ticks.get<std::deque<std::uint64_t>>();
        }
        s.seen_ = j.at("seen").get<std::map<std::string, std::uint64_t>>();
        s.alerts_ = j.at("alerts").get<std::map<std::string, std::uint64_t>>();
        s.currencies_ = j.at("currencies").get<std::map<std::string, std::uint64_t>>();
        for (const auto& [p, next] : j.at("watermarks").items()) s.watermarks_[std::stoi(p)] = next.get<std::uint64_t>();
        s.total_ = j.at("total").get<std::uint64_t>();
        if (const auto it = j.find("account_totals"); it != j.end()) {
            for (const auto& [account, n] : it->items()) s.account_totals_[std::stoull(account)] = n.get<std::uint64_t>();
        }
        return s;
    } catch (const json::exception& e) {
        throw Error(Errc::data, fmt::format("malformed rolling stats: {}", e.what()));
    }
}

std::optional<Alert> apply_rules(const Transaction& t, const RollingStats& stats, const RuleConfig& rules) {
    Alert alert;
    alert.transaction_id = t.id;
    alert.payment_type = t.payment_type;
    alert.day = t.day();
    alert.score = 1.0;
    if (rules.high_risk_type && rules.high_risk_types.contains(t.payment_type)) {
        alert.source = "rule:high_risk_type";
        alert.reason = fmt::format("high-risk payment type {}", t.payment_type);
        return alert;
    }
    if (rules.currency_mismatch && t.payment_currency != t.received_currency &&
        t.sender_bank_location != t.receiver_bank_location) {
        alert.source = "rule:currency_mismatch";
        alert.reason = fmt::format("{} to {} across {} and {}", t.payment_currency, t.received_currency,
                                   t.sender_bank_location, t.receiver_bank_location);
        return alert;
    }
    if (rules.velocity) {
        const auto count = stats.window_count(t.sender_account, static_cast<std::uint64_t>(t.timestamp)) + 1;
        if (count > rules.velocity_count) {
            alert.source = "rule:velocity";
            alert.reason = fmt::format("{} transactions within {} ticks", count, rules.velocity_window);
            return alert;
        }
    }
    return std::nullopt;
}

}  // namespace aml::streamproc
