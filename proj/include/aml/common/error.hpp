#pragma once

#include <stdexcept>
#include <string>

namespace aml {

/// Failure categories shared by every module. The CLI maps these onto
/// process exit codes (see exit_code()).
enum class Errc {
    config,            // invalid configuration value or unknown key
    io,                // filesystem failure
    data,              // malformed input record
    not_found,         // unknown topic, key, version
    already_exists,
    out_of_range,
    incompatible,      // schema or width mismatch
    empty_input,
    too_small,
    degenerate_class,  // only one label class present
    invalid_input,
    missing_prerequisite,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

const char* errc_name(Errc code) noexcept;

/// 0 success, 1 unexpected, 2 config, 3 I/O, 4 data, 5 missing state.
int exit_code(Errc code) noexcept;

}  // namespace aml
