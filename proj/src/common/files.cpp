#include "aml/common/files.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>

#include <fmt/format.h>

#include "aml/common/error.hpp"

namespace aml {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void throw_io(const std::string& action, const fs::path& path) {
    throw Error(Errc::io, fmt::format("{} '{}': {}", action, path.string(), std::strerror(errno)));
}

void write_all(int fd, std::string_view bytes, const fs::path& path) {
    const char* data = bytes.data();
    std::size_t left = bytes.size();
    while (left > 0) {
        const ssize_t written = ::write(fd, data, left);
        if (written < 0) {
            if (errno == EINTR) continue;
            throw_io("cannot write", path);
        }
        data += written;
        left -= static_cast<std::size_t>(written);
    }
}

}  // namespace

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, fmt::format("cannot open '{}' for reading", path.string()));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return std::move(buffer).str();
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(Errc::io, fmt::format("cannot create directory '{}': {}", dir.string(), ec.message()));
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    if (path.has_parent_path()) ensure_directory(path.parent_path());
    fs::path temp = path;
    static std::atomic<unsigned> sequence{0};
    temp += fmt::format(".tmp{}.{}", ::getpid(), sequence.fetch_add(1));
    const int fd = ::open(temp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw_io("cannot create", temp);
    try {
        write_all(fd, contents, temp);
        if (::fsync(fd) != 0) throw_io("cannot fsync", temp);
    } catch (...) {
        ::close(fd);
        ::unlink(temp.c_str());
        throw;
    }
    ::close(fd);
    if (::rename(temp.c_str(), path.c_str()) != 0) throw_io("cannot rename onto", path);
}

AppendFile::AppendFile(const fs::path& path) : path_(path) {
    if (path.has_parent_path()) ensure_directory(path.parent_path());
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw_io("cannot open for append", path);
}

AppendFile::~AppendFile() { close(); }

AppendFile::AppendFile(AppendFile&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), path_(std::move(other.path_)) {}

AppendFile& AppendFile::operator=(AppendFile&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = std::exchange(other.fd_, -1);
        path_ = std::move(other.path_);
    }
    return *this;
}

void AppendFile::append(std::string_view bytes) {
    if (fd_ < 0) throw Error(Errc::io, "append on closed file");
    write_all(fd_, bytes, path_);
}

void AppendFile::sync() {
    if (fd_ >= 0 && ::fdatasync(fd_) != 0) throw_io("cannot fsync", path_);
}

void AppendFile::close() noexcept {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

}  // namespace aml
