#pragma once

#include <stdexcept>
#include <string>

namespace ctlayer {

enum class ErrorCode {
    bad_magic,
    truncated,
    non_finite,
    zero_samples,
    inconsistent_sample_count,
    layer_count_mismatch,
    dim_mismatch,
    parse_error,
    io_error,
    invalid_argument,
    no_included_cells,
    not_psd,
    duplicate_label,
    length_mismatch,
    empty_input,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries a code so callers can branch
// on the kind of problem without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ctlayer
