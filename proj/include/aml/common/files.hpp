#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace aml {

/// Whole-file read; throws Error(io) when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file, fsyncs, then renames over `path`. Readers
/// observe either the old or the new contents, never a mix.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Creates `dir` (and parents); throws Error(io) on failure.
void ensure_directory(const std::filesystem::path& dir);

/// Append-only file handle with explicit durability control.
class AppendFile {
public:
    AppendFile() = default;
    explicit AppendFile(const std::filesystem::path& path);
    ~AppendFile();

    AppendFile(const AppendFile&) = delete;
    AppendFile& operator=(const AppendFile&) = delete;
    AppendFile(AppendFile&& other) noexcept;
    AppendFile& operator=(AppendFile&& other) noexcept;

    void append(std::string_view bytes);
    void sync();
    bool is_open() const noexcept { return fd_ >= 0; }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    void close() noexcept;

    int fd_ = -1;
    std::filesystem::path path_;
};

}  // namespace aml
