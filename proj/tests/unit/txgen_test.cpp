#include <doctest.h>

#include <aml/common/error.hpp>
#include <aml/common/rng.hpp>
#include <aml/txgen/generator.hpp>
#include <aml/txgen/io.hpp>

#include <cmath>
#include <map>
#include <sstream>

#include "temp_dir.hpp"

using namespace aml;
using namespace aml::txgen;

namespace {

GeneratorConfig config_with_count(std::uint64_t count, std::uint64_t seed = 42) {
    auto c = GeneratorConfig::defaults();
    c.count = count;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("reference marginals sum to the subset total") {
    CHECK(reference_total_count() == 9'504'852ULL);
    CHECK(reference_payment_types().size() == 7);
}

TEST_CASE("invalid configs are rejected") {
    auto c = config_with_count(0);
    CHECK_THROWS_AS(c.validate(), Error);
    try {
        generate(c);
        FAIL("expected config error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::config);
    }

    auto skewed = config_with_count(10);
    skewed.currency_weights["UK pounds"] += 0.1;
    CHECK_THROWS_AS(skewed.validate(), Error);

    CHECK_THROWS_AS(generator_config_from_json({{"colour", 1}}), Error);
    CHECK_THROWS_AS(generator_config_from_json({{"seasonal_amplitude", 1.5}}), Error);
}

TEST_CASE("generation is a pure function of the config") {
    auto c = config_with_count(5000, 9);
    auto a = generate(c);
    auto b = generate(c);
    REQUIRE(a.size() == 5000);
    CHECK(a == b);

    std::ostringstream sa, sb;
    write_dataset(sa, a, DatasetFormat::jsonl);
    write_dataset(sb, b, DatasetFormat::jsonl);
    CHECK(sa.str() == sb.str());

    c.seed = 10;
    CHECK(generate(c) != a);
}

TEST_CASE("ids, timestamps and amounts are well formed") {
    auto c = config_with_count(20000);
    c.first_id = 100;
    std::int64_t prev = -1;
    std::uint64_t id = 100;
    for (const auto& t : generate(c)) {
        CHECK(t.id == id++);
        CHECK(t.timestamp >= prev);
        prev = t.timestamp;
        CHECK(t.amount > 0.0);
        CHECK(t.day() >= 1);
        CHECK(t.day() <= 365);
        CHECK(t.sender_account < c.account_count);
    }
}

TEST_CASE("modal currency carries more than 90 percent") {
    auto data = generate(config_with_count(200000));
    std::map<std::string, std::size_t> counts;
    for (const auto& t : data) ++counts[t.payment_currency];
    std::size_t modal = 0;
    for (const auto& [name, n] : counts) modal = std::max(modal, n);
    CHECK(static_cast<double>(modal) / static_cast<double>(data.size()) >= 0.90);
}

TEST_CASE("cash deposit fraud rate within 3 standard errors") {
    TransactionGenerator gen(config_with_count(500000, 42));
    std::uint64_t n = 0, fraud = 0;
    while (gen.has_next()) {
        auto t = gen.next();
        if (t.payment_type != "Cash Deposit") continue;
        ++n;
        fraud += t.is_laundering ? 1 : 0;
    }
    const double p = 1405.0 / 225206.0;
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    const double rate = static_cast<double>(fraud) / static_cast<double>(n);
    CHECK(std::abs(rate - p) <= 3.0 * se);
}

TEST_CASE("payment type shares follow configured weights") {
    const auto c = config_with_count(200000, 3);
    std::map<std::string, double> counts;
    for (const auto& t : generate(c)) counts[t.payment_type] += 1.0;
    const double n = static_cast<double>(c.count);
    for (const auto& [name, w] : c.payment_type_weights) {
        const double se = std::sqrt(w * (1.0 - w) / n);
        CHECK_MESSAGE(std::abs(counts[name] / n - w) <= 3.0 * se, name);
    }
}

TEST_CASE("seasonal profile peaks at mid-year and year-end") {
    std::vector<std::pair<double, std::int64_t>> values;
    for (std::int64_t d = 1; d <= 365; ++d) values.emplace_back(seasonal_profile(d), d);
    std::sort(values.begin(), values.end(), std::greater<>());
    std::vector<std::int64_t> top{values[0].second, values[1].second};
    std::sort(top.begin(), top.end());
    CHECK(top == std::vector<std::int64_t>{182, 360});
    CHECK(values[0].first == doctest::Approx(1.0));
    CHECK(values[2].first < values[1].first);
    for (auto [v, d] : values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(seasonal_profile(120) == 0.0);
}

TEST_CASE("amplitude zero removes seasonality") {
    for (std::int64_t d : {1, 60, 182, 270, 360}) {
        CHECK(seasonal_amount(d, 1000.0, 0.0, true, 1.0) == doctest::Approx(1000.0));
        CHECK(seasonal_amount(d, 1000.0, 0.8, false, 1.0) == doctest::Approx(1000.0));
    }
    CHECK(seasonal_amount(182, 1000.0, 0.5, true, 1.0) == doctest::Approx(1500.0));
    CHECK(seasonal_amount(1, 0.001, 0.0, false, 1.0) >= 0.01);
}

TEST_CASE("fraud amounts are larger in the mid-year window") {
    Rng rng(11);
    const double sigma = 0.4;
    auto noise = [&] { return std::exp(sigma * rng.normal() - 0.5 * sigma * sigma); };
    double peak = 0.0, trough = 0.0;
    const int samples = 10000;
    for (int i = 0; i < samples; ++i) {
        peak += seasonal_amount(170 + static_cast<std::int64_t>(rng.below(26)), 1000.0, 0.5, true, noise());
        trough += seasonal_amount(60 + static_cast<std::int64_t>(rng.below(31)), 1000.0, 0.5, true, noise());
    }
    CHECK(peak / samples > trough / samples);
}

TEST_CASE("planted rules override base rates") {
    auto c = config_with_count(20000);
    for (auto& [name, rate] : c.fraud_rate_by_type) rate = 0.0;
    PlantedRule rule;
    rule.when[Feature::payment_type] = {"Cheque"};
    rule.fraud_rate = 1.0;
    c.planted_rules.push_back(rule);
    for (const auto& t : generate(c)) CHECK(t.is_laundering == (t.payment_type == "Cheque"));
}

TEST_CASE("dataset io round trips in both formats") {
    aml::testing::TempDir dir;
    auto data = generate(config_with_count(500, 5));
    write_dataset(dir / "d.jsonl", data);
    write_dataset(dir / "d.csv", data);
    CHECK(format_for(dir / "d.csv") == DatasetFormat::csv);
    CHECK(read_dataset(dir / "d.jsonl") == data);
    CHECK(read_dataset(dir / "d.csv") == data);
    for (const auto& t : data) CHECK(parse_json_line(to_json_line(t)) == t);
}

TEST_CASE("legacy label key is accepted") {
    auto t = generate(config_with_count(1))[0];
    auto j = nlohmann::json(to_json(t));
    j.erase("is_laundering");
    j["is_laundersing"] = true;
    auto back = transaction_from_json(j);
    CHECK(back.is_laundering);
    j.erase("is_laundersing");
    CHECK_THROWS_AS(transaction_from_json(j), Error);
}

TEST_CASE("malformed line is reported by number") {
    auto data = generate(config_with_count(10));
    std::ostringstream out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << (i == 6 ? std::string("{\"id\": oops") : to_json_line(data[i])) << '\n';
    }
    std::istringstream in(out.str());
    try {
        read_dataset(in, DatasetFormat::jsonl);
        FAIL("expected data error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::data);
        CHECK(std::string(e.what()).find("line 7") != std::string::npos);
    }
}
