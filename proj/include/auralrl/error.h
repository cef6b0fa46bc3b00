#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace auralrl {

enum class errc {
    empty_input,
    empty_reference,
    empty_clip,
    non_positive_power,
    sample_rate_mismatch,
    silent_input,
    length_mismatch,
    snr_out_of_range,
    duplicate_id,
    too_few_speakers,
    missing_qpt,
    nothing_to_reflect,
    hook_failed,
    group_too_small,
    shape_mismatch,
    empty_target,
    no_positives,
    invalid_argument,
    invalid_config,
    invalid_distribution,
    parse_error,
    io_error,
};

std::string_view errc_name(errc code);

// Every library failure is reported as an auralrl::error carrying a code, so the
// CLI can map it to an exit status and bindings can map it to a typed exception.
class error : public std::runtime_error {
  public:
    error(errc code, const std::string & what) : std::runtime_error(what), code_(code) {}

    errc code() const noexcept { return code_; }

  private:
    errc code_;
};

} // namespace auralrl
