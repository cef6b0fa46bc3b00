#pragma once

#include "auralrl/audio.h"

#include <filesystem>

namespace auralrl {

// 16-bit signed little-endian PCM, mono. Anything else is rejected with
// errc::parse_error; missing or unreadable files raise errc::io_error.
audio_clip read_wav(const std::filesystem::path & path);

// Samples are clamped to [-1, 1] and rounded to the nearest 16-bit step.
void write_wav(const std::filesystem::path & path, const audio_clip & clip);

} // namespace auralrl
