#include "aml/featstore/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "aml/common/calendar.hpp"
#include "aml/common/error.hpp"

namespace aml::featstore {

CorrelationMatrix correlation_matrix(std::span<const FeatureVector> vectors, std::vector<std::string> column_names) {
    if (vectors.size() < 2) {
        throw Error(Errc::too_small, fmt::format("correlation needs at least 2 rows, got {}", vectors.size()));
    }
    const std::size_t width = vectors.front().values.size();
    if (column_names.size() != width) {
        throw Error(Errc::incompatible, fmt::format("{} column names for width {}", column_names.size(), width));
    }
    const std::size_t d = width + 1;

    std::vector<double> mean(d, 0.0);
    std::vector<double> comoment(d * d, 0.0);  // upper triangle used
    std::vector<double> x(d);
    std::vector<double> delta(d);
    double n = 0.0;
    for (const auto& v : vectors) {
        if (v.values.size() != width) throw Error(Errc::incompatible, "ragged feature vectors");
        std::copy(v.values.begin(), v.values.end(), x.begin());
        x[width] = v.label ? 1.0 : 0.0;
        n += 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            delta[i] = x[i] - mean[i];
            mean[i] += delta[i] / n;
        }
        for (std::size_t i = 0; i < d; ++i) {
            if (delta[i] == 0.0) continue;
            double* row = &comoment[i * d];
            for (std::size_t j = i; j < d; ++j) row[j] += delta[i] * (x[j] - mean[j]);
        }
    }

    CorrelationMatrix out;
    out.names = std::move(column_names);
    out.names.push_back("label");
    out.values.assign(d * d, 0.0);
    out.constant.assign(d, false);
    for (std::size_t i = 0; i < d; ++i) out.constant[i] = !(comoment[i * d + i] > 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            double r = 0.0;
            if (!out.constant[i] && !out.constant[j]) {
                r = i == j ? 1.0 : comoment[i * d + j] / std::sqrt(comoment[i * d + i] * comoment[j * d + j]);
                r = std::clamp(r, -1.0, 1.0);
            }
            out.values[i * d + j] = r;
            out.values[j * d + i] = r;
        }
    }
    return out;
}

std::int64_t percent_hundredths(std::uint64_t part, std::uint64_t whole) {
    if (whole == 0) return 0;
    const __uint128_t scaled = static_cast<__uint128_t>(part) * 10'000;
    return static_cast<std::int64_t>((2 * scaled + whole) / (2 * static_cast<__uint128_t>(whole)));
}

std::string PaymentTypeRow::fraud_percent_text() const {
    return fmt::format("{}.{:02d}", fraud_percent_hundredths / 100, fraud_percent_hundredths % 100);
}

std::vector<PaymentTypeRow> payment_type_table(std::span<const Transaction> transactions) {
    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>, std::less<>> tally;
    for (const auto& t : transactions) {
        auto& [count, fraud] = tally[t.payment_type];
        ++count;
        fraud += t.is_laundering ? 1 : 0;
    }
    std::vector<PaymentTypeRow> rows;
    for (const auto& [type, counts] : tally) {
        rows.push_back(PaymentTypeRow{type, counts.first, counts.second, percent_hundredths(counts.second, counts.first)});
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const PaymentTypeRow& a, const PaymentTypeRow& b) { return a.count > b.count; });
    return rows;
}

std::vector<DailyAmounts> seasonality_series(std::span<const Transaction> transactions) {
    struct Acc {
        std::uint64_t count = 0, fraud = 0;
        double sum = 0.0, fraud_sum = 0.0;
    };
    std::map<std::int64_t, Acc> days;
    for (const auto& t : transactions) {
        Acc& a = days[t.day()];
        ++a.count;
        a.sum += t.amount;
        if (t.is_laundering) {
            ++a.fraud;
            a.fraud_sum += t.amount;
        }
    }
    std::vector<DailyAmounts> out;
    out.reserve(days.size());
    for (const auto& [day, a] : days) {
        DailyAmounts d;
        d.day = day;
        d.count = a.count;
        d.fraud_count = a.fraud;
        d.avg_amount_all = a.sum / static_cast<double>(a.count);
        if (a.fraud) d.avg_amount_fraud = a.fraud_sum / static_cast<double>(a.fraud);
        out.push_back(d);
    }
    return out;
}

std::uint64_t MonthlyGrid::total() const {
    std::uint64_t sum = 0;
    for (const auto& month : counts) {
        for (auto c : month) sum += c;
    }
    return sum;
}

MonthlyGrid alerts_per_month(std::span<const AlertEvent> alerts, std::vector<std::string> payment_types) {
    std::set<std::string> extra;
    for (const auto& a : alerts) {
        if (std::find(payment_types.begin(), payment_types.end(), a.payment_type) == payment_types.end()) {
            extra.insert(a.payment_type);
        }
    }
    payment_types.insert(payment_types.end(), extra.begin(), extra.end());

    MonthlyGrid grid;
    grid.payment_types = std::move(payment_types);
    for (auto& month : grid.counts) month.assign(grid.payment_types.size(), 0);
    std::map<std::string, std::size_t, std::less<>> column;
    for (std::size_t i = 0; i < grid.payment_types.size(); ++i) column.emplace(grid.payment_types[i], i);
    for (const auto& a : alerts) {
        ++grid.counts[static_cast<std::size_t>(month_of_day(a.day) - 1)][column.at(a.payment_type)];
    }
    return grid;
}

}  // namespace aml::featstore
