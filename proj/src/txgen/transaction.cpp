#include "aml/txgen/transaction.hpp"

#include <utility>

#include <fmt/format.h>

#include "aml/common/error.hpp"

namespace aml::txgen {

std::string_view feature_name(Feature f) noexcept {
    switch (f) {
        case Feature::payment_currency: return "payment_currency";
        case Feature::received_currency: return "received_currency";
        case Feature::sender_bank_location: return "sender_bank_location";
        case Feature::receiver_bank_location: return "receiver_bank_location";
        case Feature::payment_type: return "payment_type";
    }
    return "";
}

Feature feature_from_name(std::string_view name) {
    for (Feature f : kFeatures) {
        if (feature_name(f) == name) return f;
    }
    throw Error(Errc::config, fmt::format("unknown categorical feature '{}'", name));
}

const std::string& Transaction::category(Feature f) const noexcept {
    switch (f) {
        case Feature::payment_currency: return payment_currency;
        case Feature::received_currency: return received_currency;
        case Feature::sender_bank_location: return sender_bank_location;
        case Feature::receiver_bank_location: return receiver_bank_location;
        case Feature::payment_type: break;
    }
    return payment_type;
}

std::string& Transaction::category(Feature f) noexcept {
    return const_cast<std::string&>(std::as_const(*this).category(f));
}

}  // namespace aml::txgen
