#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aml/featstore/schema.hpp"

namespace aml::featstore {

/// Pearson correlation over encoded columns plus the label (last column).
struct CorrelationMatrix {
    std::vector<std::string> names;
    std::vector<double> values;      // row-major, names.size() squared
    std::vector<bool> constant;      // zero-variance columns (correlations reported as 0)

    std::size_t size() const noexcept { return names.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * names.size() + j]; }
};

/// Single pass with Welford co-moment updates. `column_names` names the
/// feature columns; "label" is appended. Throws Error(too_small) below 2 rows.
CorrelationMatrix correlation_matrix(std::span<const FeatureVector> vectors,
                                     std::vector<std::string> column_names);

struct PaymentTypeRow {
    std::string payment_type;
    std::uint64_t count = 0;
    std::uint64_t fraud_count = 0;
    /// 100 * fraud_count / count, rounded half-up to hundredths, in hundredths.
    std::int64_t fraud_percent_hundredths = 0;

    double fraud_percent() const noexcept { return static_cast<double>(fraud_percent_hundredths) / 100.0; }
    std::string fraud_percent_text() const;
};

/// Rounded-half-up percentage in hundredths of a percent, exact integer math.
std::int64_t percent_hundredths(std::uint64_t part, std::uint64_t whole);

/// One row per observed type, sorted by count descending (ties by name).
std::vector<PaymentTypeRow> payment_type_table(std::span<const Transaction> transactions);

struct DailyAmounts {
    std::int64_t day = 0;
    std::uint64_t count = 0;
    std::uint64_t fraud_count = 0;
    double avg_amount_all = 0.0;
    std::optional<double> avg_amount_fraud;  // missing when the day has no fraud
};

/// Ascending by day, one entry per day present.
std::vector<DailyAmounts> seasonality_series(std::span<const Transaction> transactions);

/// An alert reduced to what the monthly grid needs.
struct AlertEvent {
    std::int64_t day = 0;
    std::string payment_type;
};

struct MonthlyGrid {
    std::vector<std::string> payment_types;
    std::array<std::vector<std::uint64_t>, 12> counts;  // [month-1][type]

    std::uint64_t total() const;
};

/// 12 x |types| counts. Types start with `payment_types` (in order); types
/// seen only in alerts are appended in sorted order.
MonthlyGrid alerts_per_month(std::span<const AlertEvent> alerts, std::vector<std::string> payment_types);

}  // namespace aml::featstore
