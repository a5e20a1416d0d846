#include "aml/txgen/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "aml/common/error.hpp"

namespace aml::txgen {

using nlohmann::json;

namespace {

constexpr double kWeightTolerance = 1e-9;
constexpr std::int64_t kMidYearPeak = 182;
constexpr std::int64_t kYearEndPeak = 360;
constexpr double kPeakHalfWidth = 30.0;

const std::vector<std::string>& default_currencies() {
    static const std::vector<std::string> names{
        "UK pounds",   "Albanian lek", "Dirham",       "Euro",         "Indian rupee", "Mexican Peso",
        "Naira",       "Pakistani rupee", "Swiss franc", "Turkish lira", "US dollar",   "Yen"};
    return names;
}

const std::vector<std::string>& default_locations() {
    static const std::vector<std::string> names{
        "UK",     "Albania",     "France",  "Germany", "India",  "Italy",  "Mexico", "Netherlands",
        "Nigeria", "Pakistan",   "Spain",   "Switzerland", "Turkey", "UAE", "USA"};
    return names;
}

WeightMap dominant_weights(const std::vector<std::string>& names, double dominant) {
    WeightMap weights;
    const double rest = (1.0 - dominant) / static_cast<double>(names.size() - 1);
    for (std::size_t i = 0; i < names.size(); ++i) weights[names[i]] = i == 0 ? dominant : rest;
    return weights;
}

void validate_distribution(const WeightMap& weights, std::string_view field) {
    if (weights.empty()) throw Error(Errc::config, fmt::format("{} must not be empty", field));
    double total = 0.0;
    for (const auto& [name, w] : weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw Error(Errc::config, fmt::format("{}['{}'] must be a non-negative probability", field, name));
        }
        total += w;
    }
    if (std::abs(total - 1.0) > kWeightTolerance) {
        throw Error(Errc::config, fmt::format("{} sums to {:.12f}, expected 1", field, total));
    }
}

double circular_distance(std::int64_t day, std::int64_t centre) {
    const double d = std::abs(static_cast<double>(day_of_year(day) - centre));
    return std::min(d, static_cast<double>(kDaysPerYear) - d);
}

double raised_cosine(double distance) {
    if (distance >= kPeakHalfWidth) return 0.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi * distance / kPeakHalfWidth));
}

template <typename T>
T get_checked(const json& value, std::string_view key) {
    try {
        return value.get<T>();
    } catch (const json::exception& e) {
        throw Error(Errc::config, fmt::format("generator.{}: {}", key, e.what()));
    }
}

WeightMap weight_map_from_json(const json& value, std::string_view key) {
    if (!value.is_object()) throw Error(Errc::config, fmt::format("generator.{} must be an object", key));
    WeightMap out;
    for (const auto& [name, w] : value.items()) {
        if (!w.is_number()) throw Error(Errc::config, fmt::format("generator.{}['{}'] must be a number", key, name));
        out[name] = w.get<double>();
    }
    return out;
}

}  // namespace

const std::vector<PaymentTypeMarginal>& reference_payment_types() {
    static const std::vector<PaymentTypeMarginal> table{
        {"Credit Card", 2'012'909, 1136},   {"Debit Card", 2'012'103, 1124},
        {"Cheque", 2'011'419, 1087},        {"ACH", 2'008'807, 1159},
        {"Cross-border", 933'931, 2628},    {"Cash Withdrawal", 300'477, 1334},
        {"Cash Deposit", 225'206, 1405},
    };
    return table;
}

std::uint64_t reference_total_count() {
    std::uint64_t total = 0;
    for (const auto& row : reference_payment_types()) total += row.count;
    return total;
}

bool PlantedRule::matches(const Transaction& t) const {
    for (const auto& [feature, values] : when) {
        if (std::find(values.begin(), values.end(), t.category(feature)) == values.end()) return false;
    }
    return true;
}

GeneratorConfig GeneratorConfig::defaults() {
    GeneratorConfig config;
    const double total = static_cast<double>(reference_total_count());
    for (const auto& row : reference_payment_types()) {
        const std::string name(row.name);
        config.payment_type_weights[name] = static_cast<double>(row.count) / total;
        config.fraud_rate_by_type[name] = static_cast<double>(row.fraudulent) / static_cast<double>(row.count);
    }
    config.currency_weights = dominant_weights(default_currencies(), 0.92);
    config.location_weights = dominant_weights(default_locations(), 0.85);
    return config;
}

void GeneratorConfig::validate() const {
    if (count == 0) throw Error(Errc::config, "generator.count must be positive");
    if (days <= 0) throw Error(Errc::config, "generator.days must be positive");
    if (start_day < 1) throw Error(Errc::config, "generator.start_day must be >= 1");
    if (account_count == 0) throw Error(Errc::config, "generator.account_count must be positive");
    if (!(base_amount > 0.0) || !std::isfinite(base_amount)) {
        throw Error(Errc::config, "generator.base_amount must be positive");
    }
    if (!(seasonal_amplitude >= 0.0 && seasonal_amplitude <= 1.0)) {
        throw Error(Errc::config, "generator.seasonal_amplitude must lie in [0, 1]");
    }
    if (!(amount_sigma >= 0.0) || !std::isfinite(amount_sigma)) {
        throw Error(Errc::config, "generator.amount_sigma must be non-negative");
    }
    validate_distribution(payment_type_weights, "payment_type_weights");
    validate_distribution(currency_weights, "currency_weights");
    validate_distribution(location_weights, "location_weights");
    for (const auto& [name, rate] : fraud_rate_by_type) {
        if (!(rate >= 0.0 && rate <= 1.0)) {
            throw Error(Errc::config, fmt::format("fraud_rate_by_type['{}'] must lie in [0, 1]", name));
        }
    }
    for (const auto& [name, weight] : payment_type_weights) {
        if (!fraud_rate_by_type.contains(name)) {
            throw Error(Errc::config, fmt::format("fraud_rate_by_type has no entry for payment type '{}'", name));
        }
    }
    for (const auto& rule : planted_rules) {
        if (!(rule.fraud_rate >= 0.0 && rule.fraud_rate <= 1.0)) {
            throw Error(Errc::config, "planted_rules[].fraud_rate must lie in [0, 1]");
        }
        if (rule.when.empty()) throw Error(Errc::config, "planted_rules[].when must name at least one feature");
        for (const auto& [feature, values] : rule.when) {
            if (values.empty()) {
                throw Error(Errc::config,
                            fmt::format("planted_rules[].when.{} must list values", feature_name(feature)));
            }
        }
    }
}

void apply_json(GeneratorConfig& config, const json& j) {
    if (!j.is_object()) throw Error(Errc::config, "generator config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "seed") config.seed = get_checked<std::uint64_t>(value, key);
        else if (key == "count") config.count = get_checked<std::uint64_t>(value, key);
        else if (key == "start_day") config.start_day = get_checked<std::int64_t>(value, key);
        else if (key == "days") config.days = get_checked<std::int64_t>(value, key);
        else if (key == "first_id") config.first_id = get_checked<std::uint64_t>(value, key);
        else if (key == "payment_type_weights") config.payment_type_weights = weight_map_from_json(value, key);
        else if (key == "fraud_rate_by_type") config.fraud_rate_by_type = weight_map_from_json(value, key);
        else if (key == "currency_weights") config.currency_weights = weight_map_from_json(value, key);
        else if (key == "location_weights") config.location_weights = weight_map_from_json(value, key);
        else if (key == "base_amount") config.base_amount = get_checked<double>(value, key);
        else if (key == "seasonal_amplitude") config.seasonal_amplitude = get_checked<double>(value, key);
        else if (key == "amount_sigma") config.amount_sigma = get_checked<double>(value, key);
        else if (key == "account_count") config.account_count = get_checked<std::uint64_t>(value, key);
        else if (key == "planted_rules") {
            if (!value.is_array()) throw Error(Errc::config, "generator.planted_rules must be an array");
            config.planted_rules.clear();
            for (const auto& entry : value) {
                PlantedRule rule;
                for (const auto& [rkey, rvalue] : entry.items()) {
                    if (rkey == "fraud_rate") {
                        rule.fraud_rate = get_checked<double>(rvalue, "planted_rules[].fraud_rate");
                    } else if (rkey == "when") {
                        for (const auto& [fname, values] : rvalue.items()) {
                            rule.when[feature_from_name(fname)] =
                                get_checked<std::vector<std::string>>(values, "planted_rules[].when");
                        }
                    } else {
                        throw Error(Errc::config, fmt::format("unknown key 'generator.planted_rules[].{}'", rkey));
                    }
                }
                config.planted_rules.push_back(std::move(rule));
            }
        } else {
            throw Error(Errc::config, fmt::format("unknown key 'generator.{}'", key));
        }
    }
}

GeneratorConfig generator_config_from_json(const json& j) {
    GeneratorConfig config = GeneratorConfig::defaults();
    apply_json(config, j);
    config.validate();
    return config;
}

json to_json(const GeneratorConfig& config) {
    json rules = json::array();
    for (const auto& rule : config.planted_rules) {
        json when = json::object();
        for (const auto& [feature, values] : rule.when) when[std::string(feature_name(feature))] = values;
        rules.push_back({{"when", when}, {"fraud_rate", rule.fraud_rate}});
    }
    return json{{"seed", config.seed},
                {"count", config.count},
                {"start_day", config.start_day},
                {"days", config.days},
                {"first_id", config.first_id},
                {"payment_type_weights", config.payment_type_weights},
                {"fraud_rate_by_type", config.fraud_rate_by_type},
                {"currency_weights", config.currency_weights},
                {"location_weights", config.location_weights},
                {"base_amount", config.base_amount},
                {"seasonal_amplitude", config.seasonal_amplitude},
                {"amount_sigma", config.amount_sigma},
                {"account_count", config.account_count},
                {"planted_rules", rules}};
}

double seasonal_profile(std::int64_t day) {
    return raised_cosine(circular_distance(day, kMidYearPeak)) +
           raised_cosine(circular_distance(day, kYearEndPeak));
}

double seasonal_amount(std::int64_t day, double base, double amplitude, bool is_fraud, double noise_factor) {
    const double season = is_fraud ? 1.0 + amplitude * seasonal_profile(day) : 1.0;
    const double cents = std::round(base * season * noise_factor * 100.0);
    return std::max(cents, 1.0) / 100.0;
}

TransactionGenerator::TransactionGenerator(GeneratorConfig config)
    : config_(std::move(config)), rng_(config_.seed) {
    config_.validate();
    payment_types_ = make_categorical(config_.payment_type_weights);
    for (const auto& name : payment_types_.names) fraud_rates_.push_back(config_.fraud_rate_by_type.at(name));
    currencies_ = make_categorical(config_.currency_weights);
    locations_ = make_categorical(config_.location_weights);
}

TransactionGenerator::Categorical TransactionGenerator::make_categorical(const WeightMap& weights) {
    Categorical out;
    double running = 0.0;
    for (const auto& [name, w] : weights) {
        running += w;
        out.names.push_back(name);
        out.cumulative.push_back(running);
    }
    return out;
}

std::int64_t TransactionGenerator::timestamp_of(std::uint64_t index) const {
    const auto days = static_cast<std::uint64_t>(config_.days);
    const std::uint64_t count = config_.count;
    const std::uint64_t day_offset = index * days / count;
    const auto first_of = [&](std::uint64_t d) { return (d * count + days - 1) / days; };
    const std::uint64_t first = first_of(day_offset);
    const std::uint64_t on_day = std::max<std::uint64_t>(first_of(day_offset + 1) - first, 1);
    const auto tick = static_cast<std::int64_t>((index - first) * static_cast<std::uint64_t>(kTicksPerDay) / on_day);
    const std::int64_t day = config_.start_day + static_cast<std::int64_t>(day_offset);
    return (day - 1) * kTicksPerDay + tick;
}

Transaction TransactionGenerator::next() {
    Transaction t;
    t.id = config_.first_id + produced_;
    t.timestamp = timestamp_of(produced_);

    const std::size_t type_index = rng_.pick(payment_types_.cumulative);
    t.payment_type = payment_types_.names[type_index];
    t.payment_currency = currencies_.names[rng_.pick(currencies_.cumulative)];
    t.received_currency = currencies_.names[rng_.pick(currencies_.cumulative)];
    t.sender_bank_location = locations_.names[rng_.pick(locations_.cumulative)];
    t.receiver_bank_location = locations_.names[rng_.pick(locations_.cumulative)];
    t.sender_account = rng_.below(config_.account_count) + 1;

    double fraud_rate = fraud_rates_[type_index];
    for (const auto& rule : config_.planted_rules) {
        if (rule.matches(t)) {
            fraud_rate = rule.fraud_rate;
            break;
        }
    }
    t.is_laundering = rng_.bernoulli(fraud_rate);

    const double sigma = config_.amount_sigma;
    const double noise = std::exp(sigma * rng_.normal() - 0.5 * sigma * sigma);
    t.amount = seasonal_amount(t.day(), config_.base_amount, config_.seasonal_amplitude, t.is_laundering, noise);

    ++produced_;
    return t;
}

std::vector<Transaction> generate(const GeneratorConfig& config) {
    TransactionGenerator gen(config);
    std::vector<Transaction> out;
    out.reserve(config.count);
    while (gen.has_next()) out.push_back(gen.next());
    return out;
}

}  // namespace aml::txgen
