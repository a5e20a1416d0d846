#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace aml::storage {

struct BlobKey {
    std::string ns;
    std::string date_partition;  // YYYY-MM-DD
    std::string name;

    /// Throws Error(invalid_input) for unsafe path components or a bad date.
    void validate() const;

    std::string to_string() const { return ns + "/" + date_partition + "/" + name; }

    auto operator<=>(const BlobKey&) const = default;
};

/// Object store over a directory tree: one file per object at
/// <root>/<namespace>/<date>/<name>. Overwrites go through a temp file and a
/// rename, so concurrent readers see either the old or the new bytes.
class BlobStore {
public:
    explicit BlobStore(std::filesystem::path root);

    void put(const BlobKey& key, std::string_view bytes);
    std::string get(const BlobKey& key) const;
    bool contains(const BlobKey& key) const;

    /// Keys in (namespace, date_partition), sorted by name.
    std::vector<BlobKey> list(std::string_view ns, std::string_view date_partition) const;

    /// Date partitions present under a namespace, sorted.
    std::vector<std::string> partitions(std::string_view ns) const;

    const std::filesystem::path& root() const noexcept { return root_; }

private:
    std::filesystem::path path_of(const BlobKey& key) const;

    std::filesystem::path root_;
};

}  // namespace aml::storage
