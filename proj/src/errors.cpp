#include "simgap/errors.hpp"

namespace simgap {

std::string_view errc_name(Errc code) {
    switch (code) {
        case Errc::io_error: return "io_error";
        case Errc::bad_magic: return "bad_magic";
        case Errc::version_mismatch: return "version_mismatch";
        case Errc::truncated_payload: return "truncated_payload";
        case Errc::id_count_mismatch: return "id_count_mismatch";
        case Errc::non_finite_component: return "non_finite_component";
        case Errc::zero_norm_row: return "zero_norm_row";
        case Errc::dim_mismatch: return "dim_mismatch";
        case Errc::duplicate_id: return "duplicate_id";
        case Errc::id_collision: return "id_collision";
        case Errc::empty_input: return "empty_input";
        case Errc::bad_argument: return "bad_argument";
        case Errc::missing_threshold: return "missing_threshold";
        case Errc::scale_guard: return "scale_guard";
        case Errc::constant_input: return "constant_input";
        case Errc::value_out_of_range: return "value_out_of_range";
        case Errc::zero_denominator: return "zero_denominator";
        case Errc::length_mismatch: return "length_mismatch";
        case Errc::parse_error: return "parse_error";
        case Errc::invariant_violation: return "invariant_violation";
        case Errc::internal: return "internal";
    }
    return "unknown";
}

int errc_exit_code(Errc code) {
    switch (code) {
        case Errc::bad_argument:
        case Errc::parse_error:
            return 2;
        case Errc::invariant_violation:
            return 4;
        case Errc::internal:
            return 5;
        default:
            return 3;
    }
}

void fail(Errc code, const std::string& message) {
    throw SimgapError(code, message);
}

} // namespace simgap
