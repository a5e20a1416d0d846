#include "aml/storage/blob_store.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "aml/common/error.hpp"
#include "aml/common/files.hpp"

namespace aml::storage {

namespace fs = std::filesystem;

namespace {

bool safe_component(std::string_view part) {
    if (part.empty() || part == "." || part == "..") return false;
    return part.find_first_of("/\\") == std::string_view::npos && part.find('\0') == std::string_view::npos &&
           part.find(".tmp") == std::string_view::npos;
}

bool valid_date(std::string_view date) {
    if (date.size() != 10 || date[4] != '-' || date[7] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (!std::isdigit(static_cast<unsigned char>(date[i]))) return false;
    }
    const int month = std::stoi(std::string(date.substr(5, 2)));
    const int day = std::stoi(std::string(date.substr(8, 2)));
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

}  // namespace

void BlobKey::validate() const {
    if (!safe_component(ns)) throw Error(Errc::invalid_input, fmt::format("invalid blob namespace '{}'", ns));
    if (!valid_date(date_partition)) {
        throw Error(Errc::invalid_input, fmt::format("invalid blob date partition '{}'", date_partition));
    }
    if (!safe_component(name)) throw Error(Errc::invalid_input, fmt::format("invalid blob name '{}'", name));
}

BlobStore::BlobStore(fs::path root) : root_(std::move(root)) { ensure_directory(root_); }

fs::path BlobStore::path_of(const BlobKey& key) const {
    key.validate();
    return root_ / key.ns / key.date_partition / key.name;
}

void BlobStore::put(const BlobKey& key, std::string_view bytes) { write_file_atomic(path_of(key), bytes); }

std::string BlobStore::get(const BlobKey& key) const {
    const fs::path path = path_of(key);
    if (!fs::is_regular_file(path)) throw Error(Errc::not_found, fmt::format("no blob '{}'", key.to_string()));
    return read_file(path);
}

bool BlobStore::contains(const BlobKey& key) const { return fs::is_regular_file(path_of(key)); }

std::vector<BlobKey> BlobStore::list(std::string_view ns, std::string_view date_partition) const {
    std::vector<BlobKey> keys;
    const fs::path dir = root_ / ns / date_partition;
    if (!fs::is_directory(dir)) return keys;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (!entry.is_regular_file() || name.find(".tmp") != std::string::npos) continue;
        keys.push_back(BlobKey{std::string(ns), std::string(date_partition), name});
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

std::vector<std::string> BlobStore::partitions(std::string_view ns) const {
    std::vector<std::string> dates;
    const fs::path dir = root_ / ns;
    if (!fs::is_directory(dir)) return dates;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory() && valid_date(entry.path().filename().string())) {
            dates.push_back(entry.path().filename().string());
        }
    }
    std::sort(dates.begin(), dates.end());
    return dates;
}

}  // namespace aml::storage
