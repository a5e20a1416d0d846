#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "aml/common/calendar.hpp"

namespace aml::txgen {

/// The five categorical risk features, in fixed model-column order.
enum class Feature : std::uint8_t {
    payment_currency = 0,
    received_currency,
    sender_bank_location,
    receiver_bank_location,
    payment_type,
};

inline constexpr std::size_t kFeatureCount = 5;

inline constexpr std::array<Feature, kFeatureCount> kFeatures{
    Feature::payment_currency, Feature::received_currency, Feature::sender_bank_location,
    Feature::receiver_bank_location, Feature::payment_type};

std::string_view feature_name(Feature f) noexcept;

/// Throws Error(config) for an unknown name.
Feature feature_from_name(std::string_view name);

/// One financial transfer. `timestamp` counts simulated seconds since the
/// start of day 1; `sender_account` is an identifier (routing and velocity
/// only, never a model input).
struct Transaction {
    std::uint64_t id = 0;
    std::int64_t timestamp = 0;
    double amount = 0.0;
    std::uint64_t sender_account = 0;
    std::string payment_currency;
    std::string received_currency;
    std::string sender_bank_location;
    std::string receiver_bank_location;
    std::string payment_type;
    bool is_laundering = false;

    std::int64_t day() const noexcept { return timestamp / kTicksPerDay + 1; }
    std::int64_t tick_of_day() const noexcept { return timestamp % kTicksPerDay; }

    const std::string& category(Feature f) const noexcept;
    std::string& category(Feature f) noexcept;

    bool operator==(const Transaction&) const = default;
};

}  // namespace aml::txgen
