#include <algorithm>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "aml/common/calendar.hpp"
#include "aml/common/error.hpp"
#include "aml/featstore/analysis.hpp"
#include "aml/pipeline/commands.hpp"

namespace aml::pipeline {

using nlohmann::json;

const std::vector<std::string>& report_files() {
    static const std::vector<std::string> files{"payment_type_table.csv", "alerts_per_month.csv",
                                                "fraud_by_type.csv",      "seasonality_daily.csv",
                                                "confusion_matrix.csv",   "model_metrics.csv",
                                                "correlation_matrix.csv"};
    return files;
}

namespace {

std::string payment_type_csv(const std::vector<featstore::PaymentTypeRow>& rows) {
    std::string csv = "payment_type,count,fraud_count,fraud_percent\n";
    for (const auto& r : rows) {
        csv += fmt::format("{},{},{},{}\n", r.payment_type, r.count, r.fraud_count, r.fraud_percent_text());
    }
    return csv;
}

std::string fraud_by_type_csv(std::vector<featstore::PaymentTypeRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.fraud_count > b.fraud_count; });
    std::string csv = "payment_type,fraud_count,fraud_percent\n";
    for (const auto& r : rows) csv += fmt::format("{},{},{}\n", r.payment_type, r.fraud_count, r.fraud_percent_text());
    return csv;
}

std::string alerts_csv(const featstore::MonthlyGrid& grid) {
    std::string csv = "month";
    for (const auto& type : grid.payment_types) csv += "," + type;
    csv += ",total\n";
    for (int m = 0; m < 12; ++m) {
        csv += fmt::format("2023-{:02d}", m + 1);
        std::uint64_t total = 0;
        for (auto count : grid.counts[m]) {
            csv += fmt::format(",{}", count);
            total += count;
        }
        csv += fmt::format(",{}\n", total);
    }
    return csv;
}

std::string seasonality_csv(const std::vector<featstore::DailyAmounts>& series) {
    std::string csv = "day,date,count,fraud_count,avg_amount_all,avg_amount_fraud\n";
    for (const auto& d : series) {
        csv += fmt::format("{},{},{},{},{:.2f},{}\n", d.day, iso_date(d.day), d.count, d.fraud_count, d.avg_amount_all,
                           d.avg_amount_fraud ? fmt::format("{:.2f}", *d.avg_amount_fraud) : std::string());
    }
    return csv;
}

std::string correlation_csv(const featstore::CorrelationMatrix& m) {
    std::string csv = "column";
    for (const auto& name : m.names) csv += "," + name;
    csv += "\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
        csv += m.names[i];
        for (std::size_t j = 0; j < m.size(); ++j) csv += fmt::format(",{:.6f}", m.at(i, j));
        csv += "\n";
    }
    return csv;
}

json read_training_summary(const Workspace& workspace) {
    const auto path = workspace.train_dir() / "summary.json";
    if (!std::filesystem::exists(path)) {
        throw Error(Errc::missing_prerequisite,
                    fmt::format("{} is missing; run `amlpipe train` before `amlpipe report`", path.string()));
    }
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(Errc::data, fmt::format("{}: {}", path.string(), e.what()));
    }
}

}  // namespace

ReportResult cmd_report(const PipelineConfig& config, std::ostream& transcript) {
    Workspace workspace(config);
    return write_report(workspace, transcript);
}

ReportResult write_report(Workspace& workspace, std::ostream& transcript) {
    const auto& config = workspace.config();
    const auto transactions = load_transactions(workspace);
    const auto summary = read_training_summary(workspace);

    const auto table = featstore::payment_type_table(transactions);
    std::vector<std::string> types;
    for (const auto& r : table) types.push_back(r.payment_type);

    std::vector<featstore::AlertEvent> alerts;
    for (const auto& row : workspace.tables().scan("alerts")) {
        alerts.push_back({storage::as_int(row.at("day")), storage::as_text(row.at("payment_type"))});
    }
    if (alerts.empty() && !std::filesystem::exists(workspace.stream_dir())) {
        fmt::print(transcript, "report: warning: no stream output yet; alerts_per_month is all zero (run `amlpipe stream`)\n");
    }
    const auto grid = featstore::alerts_per_month(alerts, types);

    std::string confusion = "model,version,actual,predicted_negative,predicted_positive\n";
    std::string metrics = "model,accuracy,f1\n";
    for (const auto& m : summary.at("models")) {
        const auto kind = m.at("kind").get<std::string>();
        const auto test = models::metrics_from_json(m.at("test"));
        const auto version = m.at("version").get<int>();
        confusion += fmt::format("{},{},0,{},{}\n", kind, version, test.confusion.tn, test.confusion.fp);
        confusion += fmt::format("{},{},1,{},{}\n", kind, version, test.confusion.fn, test.confusion.tp);
        metrics += models::metrics_csv_row(kind, test) + "\n";
    }

    const auto schema = featstore::build_schema(transactions);
    std::vector<featstore::FeatureVector> vectors;
    vectors.reserve(transactions.size());
    for (const auto& t : transactions) vectors.push_back(featstore::encode(t, schema));
    const auto correlation = featstore::correlation_matrix(vectors, schema.column_names());
    vectors.clear();
    vectors.shrink_to_fit();

    const std::vector<std::string> contents{payment_type_csv(table),
                                            alerts_csv(grid),
                                            fraud_by_type_csv(table),
                                            seasonality_csv(featstore::seasonality_series(transactions)),
                                            confusion,
                                            metrics,
                                            correlation_csv(correlation)};
    const auto dir = config.reports();
    ensure_directory(dir);
    ReportResult result;
    for (std::size_t i = 0; i < contents.size(); ++i) {
        const auto path = dir / report_files()[i];
        write_file_atomic(path, contents[i]);
        result.files.push_back(path);
    }
    fmt::print(transcript, "report: wrote {} files to {} ({} transactions, {} alerts)\n", result.files.size(),
               dir.string(), transactions.size(), grid.total());
    return result;
}

}  // namespace aml::pipeline
