#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace simgap {

// Every failure mode callers may want to dispatch on. The CLI maps these
// onto its exit-code contract: 2 usage, 3 input/format, 4 invariant, 5 internal.
enum class Errc {
    io_error,
    bad_magic,
    version_mismatch,
    truncated_payload,
    id_count_mismatch,
    non_finite_component,
    zero_norm_row,
    dim_mismatch,
    duplicate_id,
    id_collision,
    empty_input,
    bad_argument,
    missing_threshold,
    scale_guard,
    constant_input,
    value_out_of_range,
    zero_denominator,
    length_mismatch,
    parse_error,
    invariant_violation,
    internal,
};

std::string_view errc_name(Errc code);

// Exit-code class for the CLI contract.
int errc_exit_code(Errc code);

class SimgapError : public std::runtime_error {
public:
    SimgapError(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

inline void require(bool condition, Errc code, const std::string& message) {
    if (!condition) fail(code, message);
}

} // namespace simgap
