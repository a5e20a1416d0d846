// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "aml/common/error.hpp"
#include "aml/common/files.hpp"
#include "aml/common/rng.hpp"
#include "aml/eventlog/event_log.hpp"
#include "aml/featstore/analysis.hpp"
#include "aml/featstore/dataset.hpp"
#include "aml/models/metrics.hpp"
#include "aml/models/model.hpp"
#include "aml/pipeline/commands.hpp"
#include "aml/pipeline/config.hpp"
#include "aml/pipeline/workspace.hpp"
#include "aml/txgen/generator.hpp"
#include "temp_dir.hpp"

using namespace aml;
namespace fs = std::filesystem;

namespace {

/// Outcome of one criterion: pass flag plus a one-line measurement summary.
struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<Outcome()> run;
};

fs::path fixture(const std::string& name) { return fs::path(AML_SOURCE_DIR) / "fixtures" / name; }

// 1 ---------------------------------------------------------------------------

Outcome split_arithmetic() {
    const std::size_t n = 9'504'852;
    const auto sizes = featstore::split_sizes(n);
    const auto idx = featstore::split_indices(n, 42);
    const bool exact = sizes == featstore::SplitSizes{5'702'911, 1'900'970, 1'900'971} &&
                       idx.train.size() == sizes.train && idx.validation.size() == sizes.validation &&
                       idx.test.size() == sizes.test;
    std::vector<std::uint8_t> seen(n, 0);
    bool partition = true;
    for (const auto* part : {&idx.train, &idx.validation, &idx.test}) {
        for (auto i : *part) {
            if (i >= n || seen[i]) partition = false;
            else seen[i] = 1;
        }
    }
    return {exact && partition, fmt::format("sizes {}/{}/{}, partition {}", sizes.train, sizes.validation,
                                            sizes.test, partition ? "ok" : "broken")};
}

// 2 ---------------------------------------------------------------------------

Outcome table_fidelity() {
    // Printed percentages of the reference table.
    const std::map<std::string, double> printed_percent{
        {"Credit Card", 0.06},  {"Debit Card", 0.06},      {"Cheque", 0.05},      {"ACH", 0.06},
        {"Cross-border", 0.28}, {"Cash Withdrawal", 0.44}, {"Cash Deposit", 0.62}};
    auto config = txgen::GeneratorConfig::defaults();
    config.count = 1'000'000;
    const auto data = txgen::generate(config);
    const auto table = featstore::payment_type_table(data);

    const double total_ref = static_cast<double>(txgen::reference_total_count());
    double worst_share_pp = 0.0, worst_se = 0.0;
    bool pass = table.size() == 7;
    for (const auto& row : table) {
        std::uint64_t ref_count = 0;
        for (const auto& r : txgen::reference_payment_types()) {
            if (r.name == row.payment_type) ref_count = r.count;
        }
        const double share_pp = 100.0 * (static_cast<double>(row.count) / 1e6 - static_cast<double>(ref_count) / total_ref);
        const double p = printed_percent.at(row.payment_type) / 100.0;
        const double n = static_cast<double>(row.count);
        const double se = std::sqrt(p * (1.0 - p) / n);
        const double z = std::abs(static_cast<double>(row.fraud_count) / n - p) / se;
        worst_share_pp = std::max(worst_share_pp, std::abs(share_pp));
        worst_se = std::max(worst_se, z);
        if (std::abs(share_pp) > 0.5 || z > 3.0) pass = false;
    }
    return {pass, fmt::format("max share deviation {:.3f}pp, max fraud-rate deviation {:.2f} SE", worst_share_pp,
                              worst_se)};
}

// 3 ---------------------------------------------------------------------------

Outcome planted_fixture() {
    auto config = pipeline::load_config(fixture("planted_signal.json"));
    const auto data = txgen::generate(config.generator);
    const models::ModelKind kinds[] = {models::ModelKind::logistic_regression, models::ModelKind::decision_tree,
                                       models::ModelKind::random_forest};
    const auto run = pipeline::train_models(data, config.training, config.seed, kinds);
    const auto& lr = run.models[0].test;
    const auto& dt = run.models[1].test;
    const auto& rf = run.models[2].test;
    const bool accurate = lr.accuracy >= 0.99 && dt.accuracy >= 0.99 && rf.accuracy >= 0.99;
    const bool ordered = rf.f1 >= dt.f1 && dt.f1 >= lr.f1;
    return {accurate && ordered,
            fmt::format("test acc LR {:.5f} DT {:.5f} RF {:.5f}; F1 RF {:.4f} >= DT {:.4f} >= LR {:.4f}", lr.accuracy,
                        dt.accuracy, rf.accuracy, rf.f1, dt.f1, lr.f1)};
}

// 4 ---------------------------------------------------------------------------

double gini_term(double n, double p) {
    const double w = n + p;
    if (w == 0.0) return 0.0;
    return w * (1.0 - (n / w) * (n / w) - (p / w) * (p / w));
}

Outcome metric_oracles() {
    Rng rng(2024);
    int metric_fail = 0, split_fail = 0, grad_fail = 0;

    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.below(300);
        std::vector<double> p(n);
        std::vector<std::uint8_t> t(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = rng.uniform();
            t[i] = rng.bernoulli(0.2 + 0.6 * rng.uniform()) ? 1 : 0;
        }
        const double thr = trial % 3 == 0 ? 0.5 : rng.uniform();
        std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool pred = p[i] >= thr;
            if (pred && t[i]) ++tp;
            else if (pred) ++fp;
            else if (t[i]) ++fn;
            else ++tn;
        }
        const auto m = models::evaluate(p, t, thr);
        const double acc = static_cast<double>(tp + tn) / static_cast<double>(n);
        const auto denom = 2 * tp + fp + fn;
        const double f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
        if (!(m.confusion == models::ConfusionMatrix{tn, fp, fn, tp}) || m.accuracy != acc || m.f1 != f1) ++metric_fail;
    }

    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t rows = 60, cols = 2 + rng.below(5);
        models::Matrix X(rows, cols);
        std::vector<std::uint8_t> y(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) X(i, j) = static_cast<double>(rng.below(4));
            y[i] = (X(i, 0) >= 2.0) != rng.bernoulli(0.2) ? 1 : 0;
        }
        y[0] = 1;
        y[1] = 0;
        models::TreeHyper hyper;
        const auto model = models::train_tree(X, y, hyper);
        const auto& root = std::get<models::Tree>(model.params).nodes.at(0);

        double best = INFINITY;
        int best_col = -1;
        double best_thr = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            std::vector<double> values;
            for (std::size_t i = 0; i < rows; ++i) values.push_back(X(i, j));
            std::sort(values.begin(), values.end());
            values.erase(std::unique(values.begin(), values.end()), values.end());
            for (std::size_t k = 0; k + 1 < values.size(); ++k) {
                const double thr = 0.5 * (values[k] + values[k + 1]);
                double ln = 0, lp = 0, rn = 0, rp = 0;
                for (std::size_t i = 0; i < rows; ++i) {
                    const bool left = X(i, j) < thr;
                    (y[i] ? (left ? lp : rp) : (left ? ln : rn)) += 1.0;
                }
                if (ln + lp < hyper.min_leaf || rn + rp < hyper.min_leaf) continue;
                const double score = (gini_term(ln, lp) + gini_term(rn, rp)) / static_cast<double>(rows);
                if (score < best - 1e-12) {
                    best = score;
                    best_col = static_cast<int>(j);
                    best_thr = thr;
                }
            }
        }
        if (root.feature != best_col || root.threshold != best_thr) ++split_fail;
    }

    const std::size_t rows = 120, cols = 6;
    models::Matrix X(rows, cols);
    std::vector<std::uint8_t> y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) X(i, j) = rng.bernoulli(0.4) ? 1.0 : 0.0;
        y[i] = rng.bernoulli(0.3) ? 1 : 0;
    }
    double worst_rel = 0.0;
    const double h = 1e-5;
    for (int point = 0; point < 20; ++point) {
        std::vector<double> w(cols);
        for (auto& v : w) v = rng.normal();
        const double b = rng.normal();
        const auto obj = models::logistic_objective(X, y, w, b);
        for (std::size_t j = 0; j <= cols; ++j) {
            auto wp = w, wm = w;
            double bp = b, bm = b;
            if (j < cols) {
                wp[j] += h;
                wm[j] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            const double numeric =
                (models::logistic_objective(X, y, wp, bp).loss - models::logistic_objective(X, y, wm, bm).loss) /
                (2.0 * h);
            const double analytic = j < cols ? obj.grad_weights[j] : obj.grad_bias;
            const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-3});
            worst_rel = std::max(worst_rel, rel);
        }
    }
    if (worst_rel >= 1e-5) grad_fail = 1;

    return {metric_fail == 0 && split_fail == 0 && grad_fail == 0,
            fmt::format("metric mismatches {}/1000, split mismatches {}/50, worst gradient rel err {:.2e}", metric_fail,
                        split_fail, worst_rel)};
}

// 5 ---------------------------------------------------------------------------

Outcome oversampling_suite() {
    Rng rng(555);
    int violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.below(400);
        const double rate = 0.01 + 0.98 * rng.uniform();
        std::vector<featstore::FeatureVector> train(n);
        for (std::size_t i = 0; i < n; ++i) {
            train[i].values = {static_cast<double>(i), static_cast<double>(rng.below(3))};
            train[i].label = rng.bernoulli(rate);
        }
        train[0].label = true;
        train[1].label = false;
        const std::uint64_t seed = rng.next();
        const auto out = featstore::oversample(train, seed);

        const auto pos_in = std::count_if(train.begin(), train.end(), [](const auto& v) { return v.label; });
        const auto pos = std::count_if(out.begin(), out.end(), [](const auto& v) { return v.label; });
        const auto neg = static_cast<std::ptrdiff_t>(out.size()) - pos;
        const bool minority_positive = pos_in * 2 <= static_cast<std::ptrdiff_t>(n);
        bool ok = pos == neg;
        ok = ok && std::equal(train.begin(), train.end(), out.begin());
        for (std::size_t i = n; ok && i < out.size(); ++i) {
            const auto& copy = out[i];
            const auto idx = static_cast<std::size_t>(copy.values[0]);
            ok = idx < n && train[idx] == copy && copy.label == minority_positive;
        }
        ok = ok && featstore::oversample(train, seed) == out;
        if (!ok) ++violations;
    }
    return {violations == 0, fmt::format("{} violations in 1000 instances", violations)};
}

// 6 ---------------------------------------------------------------------------

fs::path first_segment(const fs::path& root, int partition) {
    return root / "t" / fmt::format("partition-{}", partition) / "00000000000000000000.log";
}

Outcome eventlog_suite() {
    Rng rng(66);
    int violations = 0;
    std::uint64_t reprocessed = 0;
    for (int trial = 0; trial < 100; ++trial) {
        aml::testing::TempDir dir("accept-log");
        const int partitions = 1 + static_cast<int>(rng.below(4));
        std::vector<std::string> keys;
        for (int k = 0; k < 12; ++k) keys.push_back(fmt::format("acct-{}", rng.below(1000)));

        std::map<int, std::vector<std::string>> durable;  // acknowledged and flushed, per partition
        std::map<int, std::uintmax_t> durable_bytes;
        const int acked = 20 + static_cast<int>(rng.below(200));
        const int unflushed = static_cast<int>(rng.below(50));
        {
            eventlog::EventLog log(dir.path());
            log.create_topic("t", partitions);
            for (int i = 0; i < acked; ++i) {
                const auto& key = keys[rng.below(keys.size())];
                const auto r = log.publish("t", key, fmt::format("{}|{}", key, i));
                if (r.offset != durable[r.partition].size()) ++violations;
                durable[r.partition].push_back(fmt::format("{}|{}", key, i));
            }
            log.flush();
            for (int p = 0; p < partitions; ++p) {
                durable_bytes[p] = fs::exists(first_segment(dir.path(), p)) ? fs::file_size(first_segment(dir.path(), p)) : 0;
            }
            for (int i = 0; i < unflushed; ++i) {
                const auto& key = keys[rng.below(keys.size())];
                log.publish("t", key, fmt::format("{}|{}", key, acked + i));
            }
            log.flush();
        }
        // Kill: the unflushed tail is torn at a random byte.
        for (int p = 0; p < partitions; ++p) {
            const auto seg = first_segment(dir.path(), p);
            if (!fs::exists(seg)) continue;
            const auto full = fs::file_size(seg);
            const auto cut = durable_bytes[p] + rng.below(full - durable_bytes[p] + 1);
            fs::resize_file(seg, cut);
        }

        // Consumer: processes batches and crashes before committing at a random point.
        std::multiset<std::string> processed;
        {
            eventlog::EventLog log(dir.path());
            std::map<int, std::uint64_t> next;
            for (const auto& r : log.poll("g", "t", 100000)) {
                if (r.offset != next[r.partition]++) ++violations;
            }
            for (int p = 0; p < partitions; ++p) {
                const auto size = log.partition_size("t", p);
                const auto& expect = durable[p];
                if (size < expect.size()) ++violations;
            }
            const auto all = log.poll("g", "t", 100000);
            for (int p = 0; p < partitions; ++p) {
                std::size_t k = 0;
                for (const auto& r : all) {
                    if (r.partition != p || k >= durable[p].size()) continue;
                    if (r.payload != durable[p][k++]) ++violations;
                }
            }
            const int crash_after = static_cast<int>(rng.below(6));
            for (int batch = 0; batch < crash_after; ++batch) {
                const auto recs = log.poll("g", "t", 1 + rng.below(40));
                if (recs.empty()) break;
                std::map<int, std::uint64_t> high;
                for (const auto& r : recs) {
                    processed.insert(r.payload);
                    high[r.partition] = std::max(high[r.partition], r.offset);
                }
                if (batch + 1 < crash_after || rng.bernoulli(0.5)) {
                    for (auto [p, o] : high) log.commit("g", "t", p, o);
                }
            }
        }
        std::set<std::string> required;
        std::uint64_t total = 0;
        {
            eventlog::EventLog log(dir.path());
            for (const auto& r : log.poll("all", "t", 100000)) required.insert(r.payload);
            total = log.topic_size("t");
            for (;;) {
                const auto recs = log.poll("g", "t", 37);
                if (recs.empty()) break;
                std::map<int, std::uint64_t> high;
                std::map<std::string, std::uint64_t> last_of_key;
                for (const auto& r : recs) {
                    processed.insert(r.payload);
                    high[r.partition] = std::max(high[r.partition], r.offset);
                }
                for (auto [p, o] : high) log.commit("g", "t", p, o);
            }
            if (log.lag("g", "t") != 0) ++violations;
        }
        for (const auto& payload : required) {
            if (!processed.contains(payload)) ++violations;
        }
        reprocessed += processed.size() - total;
    }
    return {violations == 0, fmt::format("{} violations in 100 crash trials ({} redeliveries)", violations, reprocessed)};
}

// 7 ---------------------------------------------------------------------------

Outcome stream_latency() {
    aml::testing::TempDir dir("accept-stream");
    pipeline::PipelineConfig config;
    config.data_dir = dir / "data";
    config.generator.count = 100'000;
    std::ostringstream transcript;
    pipeline::cmd_generate(config, std::nullopt, std::nullopt, transcript);
    pipeline::cmd_ingest(config, config.dataset_path(), transcript);
    pipeline::cmd_train(config, transcript);
    const auto summary = pipeline::cmd_stream(config, std::nullopt, transcript);
    const auto p95 = summary.latency_percentile(95);
    const auto bound = 2 * config.stream.cadence_ticks;
    return {summary.records == 100'000 && p95 <= bound && summary.alerts > 0,
            fmt::format("{} records, {} alerts, latency p50 {} p95 {} max {} ticks (bound {})", summary.records,
                        summary.alerts, summary.latency_percentile(50), p95, summary.latency_percentile(100), bound)};
}

// 8 ---------------------------------------------------------------------------

Outcome drift_drill() {
    double max_psi_shift = 0.0, max_psi_control = 0.0;
    bool retrained = false, guarded = true, control_quiet = true, single_active = true;
    int activated_version = 0;
    {
        aml::testing::TempDir dir("accept-demo");
        auto config = pipeline::load_config(fixture("demo.json"));
        config.data_dir = dir / "data";
        config.report_dir.clear();
        config.dataset.clear();
        std::ostringstream transcript;
        const auto result = pipeline::cmd_demo(config, true, transcript);
        for (const auto& r : result.reports) max_psi_shift = std::max(max_psi_shift, *std::max_element(r.psi.begin(), r.psi.end()));
        for (const auto& r : result.retrains) {
            if (r.version && r.activated) {
                retrained = true;
                activated_version = *r.version;
            }
        }
        single_active = single_active && result.single_active_held;

        pipeline::Workspace ws(config);
        for (const auto& e : ws.registry().events()) {
            if (e.event != "activate" || e.payload.value("reason", "") != "retrain") continue;
            if (e.payload["previous_f1"].is_null()) continue;
            if (e.payload["f1"].get<double>() < e.payload["previous_f1"].get<double>() - e.payload["guard"].get<double>()) {
                guarded = false;
            }
        }
    }
    {
        aml::testing::TempDir dir("accept-control");
        auto config = pipeline::load_config(fixture("demo.json"));
        config.data_dir = dir / "data";
        config.report_dir.clear();
        config.dataset.clear();
        std::ostringstream transcript;
        const auto result = pipeline::cmd_demo(config, false, transcript);
        for (const auto& r : result.reports) {
            max_psi_control = std::max(max_psi_control, *std::max_element(r.psi.begin(), r.psi.end()));
            if (r.decision != lifecycle::Decision::none) control_quiet = false;
        }
        if (!result.retrains.empty() && result.retrains.front().version) control_quiet = false;
        single_active = single_active && result.single_active_held;
    }
    return {max_psi_shift > 0.2 && retrained && guarded && control_quiet && single_active,
            fmt::format("shift: max PSI {:.3f}, retrain activated v{}, guard {}; control: max PSI {:.4f}, {}",
                        max_psi_shift, activated_version, guarded ? "held" : "violated", max_psi_control,
                        control_quiet ? "decision none in every window" : "unexpected retrain")};
}

// 9 ---------------------------------------------------------------------------

std::map<std::string, std::string> run_bundle(const fs::path& dir) {
    pipeline::PipelineConfig config;
    config.data_dir = dir;
    std::ostringstream transcript;
    pipeline::cmd_generate(config, std::nullopt, std::nullopt, transcript);
    pipeline::cmd_ingest(config, config.dataset_path(), transcript);
    pipeline::cmd_train(config, transcript);
    pipeline::cmd_stream(config, std::nullopt, transcript);
    pipeline::cmd_report(config, transcript);
    std::map<std::string, std::string> bundle;
    for (const auto& name : pipeline::report_files()) bundle[name] = read_file(config.reports() / name);
    bundle["dataset.jsonl"] = read_file(config.dataset_path());
    bundle["train/model_metrics.csv"] = read_file(dir / "train" / "model_metrics.csv");
    bundle["stream/alerts.jsonl"] = read_file(dir / "stream" / "alerts.jsonl");
    return bundle;
}

Outcome determinism_sweep() {
    aml::testing::TempDir dir("accept-determinism");
    const auto a = run_bundle(dir / "a");
    const auto b = run_bundle(dir / "b");
    std::vector<std::string> differing;
    for (const auto& [name, bytes] : a) {
        if (b.at(name) != bytes) differing.push_back(name);
    }
    std::size_t total = 0;
    for (const auto& [name, bytes] : a) total += bytes.size();
    return {differing.empty(), differing.empty()
                                   ? fmt::format("{} files, {} bytes identical across two runs", a.size(), total)
                                   : fmt::format("differing: {}", fmt::join(differing, ", "))};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "split arithmetic", 60, split_arithmetic},
        {2, "payment-type table fidelity", 60, table_fidelity},
        {3, "planted-signal model quality", 300, planted_fixture},
        {4, "metric, split and gradient oracles", 120, metric_oracles},
        {5, "oversampling properties", 60, oversampling_suite},
        {6, "event log properties under crashes", 120, eventlog_suite},
        {7, "end-to-end alert latency", 180, stream_latency},
        {8, "drift drill and control", 300, drift_drill},
        {9, "determinism sweep", 300, determinism_sweep},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = {false, fmt::format("exception: {}", e.what())};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = seconds < c.budget_seconds;
        const bool pass = outcome.pass && in_time;
        failures += pass ? 0 : 1;
        std::cout << fmt::format("{} [{}] {}: {} ({:.1f}s of {:.0f}s{})", pass ? "PASS" : "FAIL", c.id, c.name,
                                 outcome.detail, seconds, c.budget_seconds, in_time ? "" : ", over budget")
                  << std::endl;
    }
    std::cout << fmt::format("{}/{} criteria passed", criteria.size() - static_cast<std::size_t>(failures),
                             criteria.size())
              << std::endl;
    return failures == 0 ? 0 : 1;
}
