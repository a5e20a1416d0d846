#include <doctest.h>

#include <aml/common/error.hpp>
#include <aml/common/files.hpp>
#include <aml/featstore/schema.hpp>
#include <aml/models/matrix.hpp>
#include <aml/streamproc/processor.hpp>
#include <aml/txgen/generator.hpp>
#include <aml/txgen/io.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "temp_dir.hpp"

using namespace aml;
using namespace aml::streamproc;
using aml::eventlog::EventLog;
using aml::eventlog::LogRecord;

namespace {

std::vector<Transaction> sample(std::uint64_t count, std::uint64_t seed = 42, std::uint64_t accounts = 10'000) {
    auto c = txgen::GeneratorConfig::defaults();
    c.count = count;
    c.seed = seed;
    c.account_count = accounts;
    return txgen::generate(c);
}

Transaction plain(std::uint64_t id, std::uint64_t account, std::int64_t ts, std::string type = "ACH") {
    Transaction t;
    t.id = id;
    t.sender_account = account;
    t.timestamp = ts;
    t.amount = 10.0;
    t.payment_currency = t.received_currency = "UK pounds";
    t.sender_bank_location = t.receiver_bank_location = "UK";
    t.payment_type = std::move(type);
    return t;
}

MicroBatch batch_of(const std::vector<Transaction>& ts, std::uint64_t drain = 1000) {
    MicroBatch b;
    b.drain_tick = drain;
    std::uint64_t offset = 0;
    for (const auto& t : ts) {
        b.records.push_back(LogRecord{"transactions", 0, offset, std::to_string(t.sender_account),
                                      txgen::to_json_line(t), drain > 0 ? drain - 1 : 0});
        b.watermark[0] = offset++;
    }
    return b;
}

/// Tree model with a single leaf: constant probability `p`.
ScoringModel constant_model(const featstore::EncodingSchema& schema, double p, int version) {
    ScoringModel m;
    m.version = version;
    m.schema = schema;
    m.model.kind = models::ModelKind::decision_tree;
    models::Tree tree;
    tree.nodes.push_back(models::TreeNode{-1, 0.0, -1, -1, p, 1.0});
    m.model.params = tree;
    m.model.width = schema.total_width();
    m.model.schema_hash = schema.hash();
    return m;
}

ScoringModel trained_model(const std::vector<Transaction>& data, int version) {
    auto schema = featstore::build_schema(data);
    featstore::Encoder enc(schema);
    auto vectors = enc.encode_all(data);
    auto labeled = models::to_labeled(vectors);
    models::TreeHyper hyper;
    hyper.max_depth = 6;
    hyper.min_leaf = 1;
    ScoringModel m;
    m.version = version;
    m.schema = schema;
    m.model = models::train_tree(labeled.X, labeled.y, hyper);
    m.model.schema_hash = schema.hash();
    return m;
}

void publish_all(EventLog& log, const std::vector<Transaction>& data, std::uint64_t spacing = 2) {
    std::uint64_t tick = log.clock();
    for (const auto& t : data) {
        log.publish("transactions", std::to_string(t.sender_account), txgen::to_json_line(t), tick);
        tick += spacing;
    }
}

std::vector<Alert> read_alerts(const std::filesystem::path& path) {
    std::vector<Alert> out;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) out.push_back(alert_from_json(nlohmann::json::parse(line)));
    return out;
}

}  // namespace

TEST_CASE("empty batch leaves stats untouched") {
    RollingStats stats;
    auto before = stats;
    auto r = run_microbatch(MicroBatch{}, stats, nullptr, RuleConfig{});
    CHECK(r.alerts.empty());
    CHECK(stats == before);
}

TEST_CASE("single cash deposit raises one rule alert") {
    RollingStats stats;
    auto r = run_microbatch(batch_of({plain(1, 7, 0, "Cash Deposit")}), stats, nullptr, RuleConfig{});
    REQUIRE(r.alerts.size() == 1);
    CHECK(r.alerts[0].source == "rule:high_risk_type");
    CHECK(r.alerts[0].transaction_id == 1);
    CHECK(stats.total_observed() == 1);
    CHECK(stats.alerts("Cash Deposit") == 1);
}

TEST_CASE("rule order and each rule in isolation") {
    RollingStats stats;
    auto mismatch = plain(1, 1, 0);
    mismatch.received_currency = "Euro";
    mismatch.receiver_bank_location = "France";
    CHECK(apply_rules(mismatch, stats, RuleConfig{})->source == "rule:currency_mismatch");
    mismatch.receiver_bank_location = "UK";
    CHECK_FALSE(apply_rules(mismatch, stats, RuleConfig{}).has_value());

    for (const char* type : {"Cash Deposit", "Cash Withdrawal", "Cross-border"}) {
        CHECK(apply_rules(plain(1, 1, 0, type), stats, RuleConfig{}).has_value());
    }
    for (const char* type : {"ACH", "Cheque", "Credit Card", "Debit Card"}) {
        CHECK_FALSE(apply_rules(plain(1, 1, 0, type), stats, RuleConfig{}).has_value());
    }
}

TEST_CASE("velocity fires on the sixth transaction in the window") {
    RollingStats stats(1000);
    RuleConfig rules = RuleConfig::all_disabled();
    rules.velocity = true;
    for (int i = 0; i < 5; ++i) {
        auto t = plain(static_cast<std::uint64_t>(i + 1), 42, 100 * i);
        CHECK_FALSE(apply_rules(t, stats, rules).has_value());
        CHECK(stats.observe(t, 0, static_cast<std::uint64_t>(i)));
    }
    auto sixth = plain(6, 42, 500);
    auto alert = apply_rules(sixth, stats, rules);
    REQUIRE(alert.has_value());
    CHECK(alert->source == "rule:velocity");
    CHECK_FALSE(apply_rules(plain(7, 43, 500), stats, rules).has_value());
    // the first transaction (t=0) falls out of (t-W, t] at t=1000
    CHECK_FALSE(apply_rules(plain(8, 42, 1000), stats, rules).has_value());
}

TEST_CASE("disabled rules never fire") {
    RollingStats stats;
    auto rules = RuleConfig::all_disabled();
    auto data = sample(2000, 3, 5);
    auto r = run_microbatch(batch_of(data), stats, nullptr, rules);
    CHECK(r.alerts.empty());
    CHECK(stats.total_observed() == 2000);
}

TEST_CASE("rule config json rejects unknown keys") {
    RuleConfig rules;
    apply_json(rules, {{"velocity_count", 9}, {"currency_mismatch", false}});
    CHECK(rules.velocity_count == 9);
    CHECK_FALSE(rules.currency_mismatch);
    CHECK_THROWS_AS(apply_json(rules, {{"magic", true}}), Error);
}

TEST_CASE("batch alerts equal rules union model scores") {
    auto train = sample(5000, 8);
    auto model = trained_model(train, 3);
    auto data = sample(1000, 9, 200);
    RollingStats stats(1000);
    RuleConfig rules;
    auto result = run_microbatch(batch_of(data), stats, &model, rules);

    std::map<std::uint64_t, std::vector<std::int64_t>> history;
    std::map<std::uint64_t, std::string> expected;
    for (const auto& t : data) {
        const auto& seen = history[t.sender_account];
        std::uint32_t in_window = 0;
        for (auto ts : seen) {
            if (ts > t.timestamp - 1000 && ts <= t.timestamp) ++in_window;
        }
        std::string source;
        if (rules.high_risk_types.contains(t.payment_type)) source = "rule:high_risk_type";
        else if (t.payment_currency != t.received_currency && t.sender_bank_location != t.receiver_bank_location)
            source = "rule:currency_mismatch";
        else if (in_window + 1 > rules.velocity_count) source = "rule:velocity";
        else if (score_online(t, model.schema, model.model) >= 0.5) source = "v3";
        if (!source.empty()) expected[t.id] = source;
        history[t.sender_account].push_back(t.timestamp);
    }
    std::map<std::uint64_t, std::string> actual;
    for (const auto& a : result.alerts) actual[a.transaction_id] = a.source;
    CHECK(actual == expected);
    CHECK(result.observed == 1000);
}

TEST_CASE("online scoring equals batch prediction") {
    auto data = sample(3000, 12);
    auto model = trained_model(data, 1);
    auto probe = sample(100, 13);
    featstore::Encoder enc(model.schema);
    auto vectors = enc.encode_all(probe);
    auto batch = models::predict_proba(model.model, models::to_labeled(vectors).X);
    for (std::size_t i = 0; i < probe.size(); ++i) CHECK(score_online(probe[i], model.schema, model.model) == batch[i]);
}

TEST_CASE("majority constant model returns training prevalence") {
    auto data = sample(4000, 14);
    auto schema = featstore::build_schema(data);
    featstore::Encoder enc(schema);
    auto labeled = models::to_labeled(enc.encode_all(data));
    models::TreeHyper hyper;
    hyper.max_depth = 0;
    auto model = models::train_tree(labeled.X, labeled.y, hyper);
    model.schema_hash = schema.hash();
    double prevalence = 0.0;
    for (auto v : labeled.y) prevalence += v;
    prevalence /= static_cast<double>(labeled.y.size());
    for (const auto& t : sample(20, 15)) CHECK(score_online(t, schema, model) == doctest::Approx(prevalence));
}

TEST_CASE("schema mismatch is incompatible") {
    auto data = sample(2000, 16);
    auto model = trained_model(data, 2);
    std::vector<Transaction> few(data.begin(), data.begin() + 3);
    auto other = featstore::build_schema(few);
    try {
        score_online(data[0], other, model.model);
        FAIL("expected incompatible");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::incompatible);
    }
    auto broken = model;
    broken.schema = other;
    RollingStats stats;
    CHECK_THROWS_AS(run_microbatch(batch_of(data), stats, &broken, RuleConfig{}), Error);
    CHECK(stats.total_observed() == 0);
}

TEST_CASE("undecodable records go to dead letters") {
    auto b = batch_of({plain(1, 1, 0), plain(2, 1, 1)});
    b.records[0].payload = "{not json";
    RollingStats stats;
    auto r = run_microbatch(b, stats, nullptr, RuleConfig{});
    REQUIRE(r.dead_letters.size() == 1);
    CHECK(r.dead_letters[0].offset == 0);
    CHECK(stats.total_observed() == 1);
}

TEST_CASE("rolling stats survive json") {
    RollingStats stats(500);
    auto data = sample(300, 17, 20);
    run_microbatch(batch_of(data), stats, nullptr, RuleConfig{});
    CHECK(RollingStats::from_json(stats.to_json()) == stats);
    CHECK(stats.window_exact());
}

TEST_CASE("processor accounts for every record") {
    aml::testing::TempDir dir;
    EventLog log(dir / "log");
    log.create_topic("transactions", 4);
    auto data = sample(5000, 18);
    publish_all(log, data);
    log.publish("transactions", "junk", "garbage", log.clock());

    storage::TableStore tables(dir / "tables");
    StreamProcessor proc(log, dir / "stream", StreamConfig{}, {}, &tables);
    auto summary = proc.run();
    CHECK(summary.records == 5001);
    CHECK(summary.dead_letters == 1);
    CHECK(proc.stats().total_observed() == 5000);
    CHECK(log.lag("scoring", "transactions") == 0);
    auto alerts = read_alerts(proc.alerts_path());
    CHECK(alerts.size() == summary.alerts);
    CHECK(tables.size("alerts") == summary.alerts);
    for (const auto& a : alerts) {
        CHECK(a.emit_tick >= a.ingest_tick);
        CHECK(a.latency <= 2000);
    }
    CHECK(summary.latency_percentile(100) <= 2000);

    std::map<std::string, std::uint64_t> last_offset;
    for (const auto& a : alerts) {
        const auto key = std::to_string(a.partition);
        if (last_offset.contains(key)) CHECK(a.offset > last_offset[key]);
        last_offset[key] = a.offset;
    }

    auto again = StreamProcessor(log, dir / "stream", StreamConfig{}).run();
    CHECK(again.records == 0);
}

TEST_CASE("crash before commit loses no alerts") {
    aml::testing::TempDir dir;
    auto data = sample(6000, 19);
    std::set<std::uint64_t> expected;
    {
        EventLog log(dir / "clean-log");
        log.create_topic("transactions", 4);
        publish_all(log, data);
        StreamProcessor proc(log, dir / "clean", StreamConfig{});
        proc.run();
        for (const auto& a : read_alerts(proc.alerts_path())) expected.insert(a.transaction_id);
    }
    REQUIRE(!expected.empty());

    EventLog log(dir / "log");
    log.create_topic("transactions", 4);
    publish_all(log, data);
    int crashes = 0;
    for (std::uint64_t crash_at : {2, 5}) {
        StreamProcessor proc(log, dir / "stream", StreamConfig{});
        proc.before_commit = [&](const MicroBatch& b) {
            if (b.batch_id == crash_at) throw std::runtime_error("simulated crash");
        };
        try {
            proc.run();
        } catch (const std::runtime_error&) {
            ++crashes;
        }
    }
    CHECK(crashes == 2);
    StreamProcessor proc(log, dir / "stream", StreamConfig{});
    proc.run();
    CHECK(proc.stats().total_observed() == 6000);

    std::set<std::uint64_t> seen;
    for (const auto& a : read_alerts(proc.alerts_path())) seen.insert(a.transaction_id);
    for (auto id : expected) CHECK(seen.contains(id));
}

TEST_CASE("activation takes effect at the next batch") {
    aml::testing::TempDir dir;
    EventLog log(dir / "log");
    log.create_topic("transactions", 2);
    auto data = sample(3000, 20);
    publish_all(log, data);
    auto schema = featstore::build_schema(data);
    auto active = std::make_shared<const ScoringModel>(constant_model(schema, 1.0, 1));
    StreamConfig cfg;
    cfg.rules = RuleConfig::all_disabled();
    StreamProcessor proc(log, dir / "stream", cfg, [&] { return active; });

    proc.run(1);
    auto first = read_alerts(proc.alerts_path());
    REQUIRE(!first.empty());
    for (const auto& a : first) CHECK(a.source == "v1");

    active = std::make_shared<const ScoringModel>(constant_model(schema, 1.0, 2));
    proc.run(1);
    auto all = read_alerts(proc.alerts_path());
    REQUIRE(all.size() > first.size());
    for (std::size_t i = first.size(); i < all.size(); ++i) CHECK(all[i].source == "v2");
}

TEST_CASE("incompatible model falls back to rules") {
    aml::testing::TempDir dir;
    EventLog log(dir / "log");
    log.create_topic("transactions", 2);
    auto data = sample(1500, 21);
    publish_all(log, data);
    std::vector<Transaction> few(data.begin(), data.begin() + 2);
    auto model = constant_model(featstore::build_schema(data), 1.0, 4);
    model.schema = featstore::build_schema(few);
    auto shared = std::make_shared<const ScoringModel>(model);
    StreamProcessor proc(log, dir / "stream", StreamConfig{}, [&] { return shared; });
    auto summary = proc.run();
    CHECK(summary.model_fallbacks == summary.batches);
    for (const auto& a : read_alerts(proc.alerts_path())) CHECK(a.source.starts_with("rule:"));
}
