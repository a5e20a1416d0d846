#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "aml/common/rng.hpp"
#include "aml/txgen/transaction.hpp"

namespace aml::txgen {

using WeightMap = std::map<std::string, double>;

/// Payment type names and Table-style marginals: (count, fraudulent count).
struct PaymentTypeMarginal {
    std::string_view name;
    std::uint64_t count;
    std::uint64_t fraudulent;
};

/// Reference payment-type marginals, in descending count order.
const std::vector<PaymentTypeMarginal>& reference_payment_types();

/// Sum of the reference counts (9,504,852).
std::uint64_t reference_total_count();

/// A planted labelling rule: when every listed feature takes one of the
/// listed values, the laundering label is drawn with `fraud_rate` instead of
/// the payment type's base rate. The first matching rule wins.
struct PlantedRule {
    std::map<Feature, std::vector<std::string>> when;
    double fraud_rate = 1.0;

    bool matches(const Transaction& t) const;
};

struct GeneratorConfig {
    std::uint64_t seed = 42;
    std::uint64_t count = 100'000;
    std::int64_t start_day = 1;
    std::int64_t days = 365;
    std::uint64_t first_id = 1;
    WeightMap payment_type_weights;
    WeightMap fraud_rate_by_type;
    WeightMap currency_weights;
    WeightMap location_weights;
    double base_amount = 1000.0;
    double seasonal_amplitude = 0.8;
    double amount_sigma = 0.4;
    std::uint64_t account_count = 10'000;
    std::vector<PlantedRule> planted_rules;

    /// Reference marginals, 12 currencies (dominant 0.92), 15 locations
    /// (dominant 0.85).
    static GeneratorConfig defaults();

    /// Throws Error(config) describing the first violated invariant.
    void validate() const;
};

/// Overlays the keys present in `j` onto `config`. Unknown keys are rejected.
void apply_json(GeneratorConfig& config, const nlohmann::json& j);

/// defaults() overlaid with `j`, then validated.
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GeneratorConfig& config);

/// Bimodal seasonal profile in [0, 1]: raised-cosine bumps of half-width 30
/// days centred on day 182 and day 360, distance measured around the year.
double seasonal_profile(std::int64_t day);

/// Amount for one transaction. `noise_factor` is the multiplicative noise
/// draw (mean 1). Fraud amounts scale with the seasonal profile; others do
/// not. Result is rounded to cents and at least 0.01.
double seasonal_amount(std::int64_t day, double base, double amplitude, bool is_fraud,
                       double noise_factor);

/// Streaming generator: constant memory, one transaction per next().
class TransactionGenerator {
public:
    explicit TransactionGenerator(GeneratorConfig config);

    bool has_next() const noexcept { return produced_ < config_.count; }
    Transaction next();

    const GeneratorConfig& config() const noexcept { return config_; }

private:
    struct Categorical {
        std::vector<std::string> names;
        std::vector<double> cumulative;
    };

    static Categorical make_categorical(const WeightMap& weights);
    std::int64_t timestamp_of(std::uint64_t index) const;

    GeneratorConfig config_;
    Rng rng_;
    Categorical payment_types_;
    std::vector<double> fraud_rates_;
    Categorical currencies_;
    Categorical locations_;
    std::uint64_t produced_ = 0;
};

/// Whole-dataset convenience over TransactionGenerator.
std::vector<Transaction> generate(const GeneratorConfig& config);

}  // namespace aml::txgen
