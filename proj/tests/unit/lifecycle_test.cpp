#include <doctest.h>

#include <aml/common/error.hpp>
#include <aml/common/rng.hpp>
#include <aml/lifecycle/drift.hpp>
#include <aml/lifecycle/registry.hpp>
#include <aml/models/matrix.hpp>
#include <aml/txgen/generator.hpp>

#include <cmath>

#include "temp_dir.hpp"

using namespace aml;
using namespace aml::lifecycle;

namespace {

std::vector<Transaction> sample(std::uint64_t count, std::uint64_t seed = 42) {
    auto c = txgen::GeneratorConfig::defaults();
    c.count = count;
    c.seed = seed;
    for (auto& [name, rate] : c.fraud_rate_by_type) rate = std::min(1.0, rate * 20.0);
    return txgen::generate(c);
}

TrainingOutcome train_on(std::span<const Transaction> data, models::ModelKind kind, std::uint64_t seed) {
    TrainingOutcome out;
    out.schema = featstore::build_schema(data);
    featstore::Encoder enc(out.schema);
    auto labeled = models::to_labeled(enc.encode_all(data));
    models::TreeHyper hyper;
    hyper.max_depth = 4;
    switch (kind) {
        case models::ModelKind::logistic_regression: out.model = models::train_logistic(labeled.X, labeled.y); break;
        default: out.model = models::train_tree(labeled.X, labeled.y, hyper); break;
    }
    out.model.schema_hash = out.schema.hash();
    out.model.train_seed = seed;
    out.validation = models::evaluate(models::predict_proba(out.model, labeled.X), labeled.y);
    out.test = out.validation;
    out.profile = build_profile(data);
    return out;
}

struct Env {
    aml::testing::TempDir dir;
    storage::BlobStore blobs{dir / "blobs"};
    std::vector<Transaction> data = sample(3000);
    TrainingOutcome outcome = train_on(data, models::ModelKind::decision_tree, 1);

    int register_one(ModelRegistry& reg, std::uint64_t tick = 0) {
        return reg.register_model({outcome.model, outcome.schema, outcome.validation, outcome.test, outcome.profile,
                                   tick, "2023-01-01"});
    }
};

std::size_t active_count(const ModelRegistry& reg) {
    std::size_t n = 0;
    for (const auto& r : reg.list()) n += r.status == ModelStatus::active ? 1 : 0;
    return n;
}

ReferenceProfile uniform_profile(double dominant) {
    ReferenceProfile p;
    for (auto& block : p) {
        block["a"] = dominant;
        block["b"] = 1.0 - dominant;
    }
    return p;
}

std::vector<Transaction> window_from(const ReferenceProfile& profile, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Transaction> out(n);
    for (auto& t : out) {
        for (auto f : txgen::kFeatures) {
            const auto& block = profile[static_cast<std::size_t>(f)];
            double u = rng.uniform(), acc = 0.0;
            std::string pick = block.rbegin()->first;
            for (const auto& [name, p] : block) {
                acc += p;
                if (u < acc) {
                    pick = name;
                    break;
                }
            }
            t.category(f) = pick;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("registration assigns increasing versions and persists") {
    Env env;
    std::vector<ModelRecord> before;
    {
        ModelRegistry reg(env.dir / "registry", env.blobs);
        CHECK(env.register_one(reg, 5) == 1);
        CHECK(env.register_one(reg, 6) == 2);
        CHECK(reg.list().size() == 2);
        CHECK_FALSE(reg.active().has_value());
        before = reg.list();
    }
    ModelRegistry reg(env.dir / "registry", env.blobs);
    auto after = reg.list();
    REQUIRE(after.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(after[i].version == before[i].version);
        CHECK(after[i].created_tick == before[i].created_tick);
        CHECK(after[i].metrics == before[i].metrics);
        CHECK(after[i].schema == before[i].schema);
        CHECK(after[i].reference_profile == before[i].reference_profile);
        CHECK(after[i].blob == before[i].blob);
    }
    auto loaded = reg.load_model(2);
    featstore::Encoder enc(env.outcome.schema);
    auto X = models::to_labeled(enc.encode_all(env.data)).X;
    CHECK(models::predict_proba(loaded, X) == models::predict_proba(env.outcome.model, X));
}

TEST_CASE("registration requires a matching schema hash") {
    Env env;
    ModelRegistry reg(env.dir / "registry", env.blobs);
    auto model = env.outcome.model;
    model.schema_hash = 0;
    try {
        reg.register_model({model, env.outcome.schema, env.outcome.validation, {}, env.outcome.profile, 0});
        FAIL("expected rejection");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::invalid_input);
    }
    CHECK(reg.list().empty());
}

TEST_CASE("activation retires the previous version") {
    Env env;
    ModelRegistry reg(env.dir / "registry", env.blobs);
    env.register_one(reg);
    env.register_one(reg);
    reg.activate(1, 10);
    reg.activate(2, 11);
    CHECK(reg.get(1).status == ModelStatus::retired);
    CHECK(reg.get(2).status == ModelStatus::active);
    CHECK(reg.active()->version == 2);
    try {
        reg.activate(9, 12);
        FAIL("expected not_found");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::not_found);
    }
    CHECK(reg.active()->version == 2);
    CHECK_THROWS_AS(reg.get(9), Error);
}

TEST_CASE("torn journal tail is dropped on load") {
    Env env;
    {
        ModelRegistry reg(env.dir / "registry", env.blobs);
        env.register_one(reg);
        reg.activate(1, 3);
    }
    {
        AppendFile f(env.dir / "registry" / "journal.jsonl");
        f.append("{\"event\":\"activ");
    }
    ModelRegistry reg(env.dir / "registry", env.blobs);
    CHECK(reg.active()->version == 1);
    env.register_one(reg);
    ModelRegistry again(env.dir / "registry", env.blobs);
    CHECK(again.list().size() == 2);
}

TEST_CASE("single active version across random operations and restarts") {
    Env env;
    Rng rng(77);
    auto reg = std::make_unique<ModelRegistry>(env.dir / "registry", env.blobs);
    int expected_active = 0;
    for (int step = 0; step < 60; ++step) {
        const auto op = rng.below(4);
        const auto n = reg->list().size();
        if (op == 0 || n == 0) {
            env.register_one(*reg, static_cast<std::uint64_t>(step));
        } else if (op == 1) {
            expected_active = static_cast<int>(1 + rng.below(n));
            reg->activate(expected_active, static_cast<std::uint64_t>(step));
        } else if (op == 2) {
            reg = std::make_unique<ModelRegistry>(env.dir / "registry", env.blobs);
        } else {
            CHECK_THROWS_AS(reg->activate(static_cast<int>(n + 1), 0), Error);
        }
        CHECK(active_count(*reg) == (expected_active ? 1u : 0u));
        if (expected_active) CHECK(reg->active()->version == expected_active);
    }
}

TEST_CASE("psi basics") {
    const std::map<std::string, double> p{{"a", 0.5}, {"b", 0.3}, {"c", 0.2}};
    CHECK(psi(p, p) == 0.0);
    const std::map<std::string, double> ref{{"a", 0.9}, {"b", 0.1}};
    const std::map<std::string, double> live{{"a", 0.1}, {"b", 0.9}};
    const double expected = (0.1 - 0.9) * std::log(0.1 / 0.9) + (0.9 - 0.1) * std::log(0.9 / 0.1);
    CHECK(psi(ref, live) == doctest::Approx(expected));
    CHECK(psi(ref, live) > 0.2);
    const std::map<std::string, double> novel{{"a", 0.9}, {"z", 0.1}};
    CHECK(psi(ref, novel) > 0.0);

    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        std::map<std::string, double> x, y;
        double sx = 0, sy = 0;
        for (const char* k : {"a", "b", "c", "d"}) {
            sx += x[k] = rng.uniform();
            sy += y[k] = rng.bernoulli(0.2) ? 0.0 : rng.uniform();
        }
        for (auto& [k, v] : x) v /= sx;
        for (auto& [k, v] : y) v /= (sy > 0 ? sy : 1);
        CHECK(psi(x, y) >= 0.0);
    }
}

TEST_CASE("self drift stays below the noise floor") {
    const auto ref = build_profile(sample(20000, 4));
    const auto live = sample(10000, 5);
    auto report = check_drift(1, ref, live, {}, 0.99);
    for (double v : report.psi) CHECK(v < 0.02);
    CHECK(report.decision == Decision::none);
    CHECK(report.breached.empty());
    CHECK_FALSE(report.live_accuracy.has_value());
}

TEST_CASE("dominant category collapse triggers retrain") {
    const auto ref = uniform_profile(0.9);
    auto live = window_from(uniform_profile(0.1), 10000, 6);
    auto report = check_drift(2, ref, live, {}, 0.99);
    for (double v : report.psi) CHECK(v > 0.2);
    CHECK(report.decision == Decision::retrain);
    CHECK(report.breached.size() == 5);
    CHECK(report.breached[0].signal == "psi:payment_currency");

    auto exact = window_from(ref, 10, 1);
    auto exact_profile = build_profile(exact);
    auto same = check_drift(3, exact_profile, exact, {}, 0.99);
    for (double v : same.psi) CHECK(v == 0.0);
}

TEST_CASE("accuracy signal needs enough labels") {
    const auto data = sample(1000, 7);
    const auto ref = build_profile(data);
    std::vector<LabeledOutcome> few(150, {true, false});
    auto report = check_drift(1, ref, data, few, 0.99);
    CHECK_FALSE(report.live_accuracy.has_value());

    std::vector<LabeledOutcome> many(300, {false, false});
    for (std::size_t i = 0; i < 30; ++i) many[i] = {true, false};
    report = check_drift(1, ref, data, many, 0.99);
    REQUIRE(report.live_accuracy.has_value());
    CHECK(*report.live_accuracy == doctest::Approx(0.9));
    CHECK(report.decision == Decision::retrain);
    CHECK(report.breached.back().signal == "accuracy");

    CHECK_THROWS_AS(check_drift(1, ref, std::span<const Transaction>{}, {}, 0.9), Error);
}

TEST_CASE("retrain respects the decision, the guard and failures") {
    Env env;
    ModelRegistry reg(env.dir / "registry", env.blobs);
    env.register_one(reg);
    reg.activate(1, 0);

    RetrainHooks hooks;
    auto latest = sample(3000, 9);
    hooks.load_latest = [&] { return latest; };
    hooks.train = train_on;

    DriftReport calm;
    auto none = maybe_retrain(reg, calm, hooks, 1);
    CHECK_FALSE(none.version.has_value());
    CHECK(reg.list().size() == 1);

    DriftReport drift;
    drift.decision = Decision::retrain;
    auto done = maybe_retrain(reg, drift, hooks, 2);
    REQUIRE(done.version == 2);
    CHECK(reg.get(2).kind == models::ModelKind::decision_tree);
    CHECK(reg.get(2).train_seed == derive_seed(0, 2));
    CHECK(active_count(reg) == 1);

    const int before = reg.active()->version;
    std::vector<Transaction> negatives;
    for (const auto& t : latest) {
        if (!t.is_laundering) negatives.push_back(t);
    }
    hooks.load_latest = [&] { return negatives; };
    auto failed = maybe_retrain(reg, drift, hooks, 3);
    CHECK(failed.failure.has_value());
    CHECK_FALSE(failed.version.has_value());
    CHECK(reg.active()->version == before);
    CHECK(reg.events().back().event == "retrain_failed");

    // a candidate that cannot meet the guard is registered but not activated
    hooks.load_latest = [&] { return latest; };
    const double active_f1 = reg.active()->metrics.f1;
    hooks.train = [active_f1](std::span<const Transaction> data, models::ModelKind kind, std::uint64_t seed) {
        auto out = train_on(data, kind, seed);
        out.validation.f1 = active_f1 - 0.01;
        return out;
    };
    auto guarded = maybe_retrain(reg, drift, hooks, 4);
    REQUIRE(guarded.version.has_value());
    CHECK_FALSE(guarded.activated);
    CHECK(reg.active()->version == before);

    for (const auto& e : reg.events()) {
        if (e.event != "activate" || e.payload.value("reason", "") != "retrain") continue;
        if (e.payload["previous_f1"].is_null()) continue;
        CHECK(e.payload["f1"].get<double>() >= e.payload["previous_f1"].get<double>() - e.payload["guard"].get<double>());
    }
}
