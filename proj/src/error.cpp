#include "auralrl/error.h"

namespace auralrl {

std::string_view errc_name(errc code) {
    switch (code) {
        case errc::empty_input:          return "EmptyInput";
        case errc::empty_reference:      return "EmptyReference";
        case errc::empty_clip:           return "EmptyClip";
        case errc::non_positive_power:   return "NonPositivePower";
        case errc::sample_rate_mismatch: return "SampleRateMismatch";
        case errc::silent_input:         return "SilentInput";
        case errc::length_mismatch:      return "LengthMismatch";
        case errc::snr_out_of_range:     return "SnrOutOfRange";
        case errc::duplicate_id:         return "DuplicateId";
        case errc::too_few_speakers:     return "TooFewSpeakers";
        case errc::missing_qpt:          return "MissingQpt";
        case errc::nothing_to_reflect:   return "NothingToReflect";
        case errc::hook_failed:          return "HookFailed";
        case errc::group_too_small:      return "GroupTooSmall";
        case errc::shape_mismatch:       return "ShapeMismatch";
        case errc::empty_target:         return "EmptyTarget";
        case errc::no_positives:         return "NoPositives";
        case errc::invalid_argument:     return "InvalidArgument";
        case errc::invalid_config:       return "InvalidConfig";
        case errc::invalid_distribution: return "InvalidDistribution";
        case errc::parse_error:          return "ParseError";
        case errc::io_error:             return "IoError";
    }
    return "Unknown";
}

} // namespace auralrl
