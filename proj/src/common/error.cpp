#include "aml/common/error.hpp"

namespace aml {

const char* errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::config: return "config";
        case Errc::io: return "io";
        case Errc::data: return "data";
        case Errc::not_found: return "not_found";
        case Errc::already_exists: return "already_exists";
        case Errc::out_of_range: return "out_of_range";
        case Errc::incompatible: return "incompatible";
        case Errc::empty_input: return "empty_input";
        case Errc::too_small: return "too_small";
        case Errc::degenerate_class: return "degenerate_class";
        case Errc::invalid_input: return "invalid_input";
        case Errc::missing_prerequisite: return "missing_prerequisite";
    }
    return "unknown";
}

int exit_code(Errc code) noexcept {
    switch (code) {
        case Errc::config: return 2;
        case Errc::io: return 3;
        case Errc::data:
        case Errc::empty_input:
        case Errc::too_small:
        case Errc::degenerate_class:
        case Errc::invalid_input:
        case Errc::incompatible: return 4;
        case Errc::not_found:
        case Errc::already_exists:
        case Errc::out_of_range:
        case Errc::missing_prerequisite: return 5;
    }
    return 1;
}

}  // namespace aml
