#include "auralrl/wav.h"

#include "auralrl/error.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace auralrl {

namespace {

uint32_t le32(const unsigned char * p) {
    return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) | (uint32_t(p[3]) << 24);
}

uint16_t le16(const unsigned char * p) {
    return uint16_t(p[0] | (p[1] << 8));
}

void put32(std::string & out, uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

void put16(std::string & out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

} // namespace

audio_clip read_wav(const std::filesystem::path & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw error(errc::io_error, "cannot open " + path.string());
    }
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto *      p = reinterpret_cast<const unsigned char *>(data.data());
    if (data.size() < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
        throw error(errc::parse_error, path.string() + ": not a RIFF/WAVE file");
    }
    bool       have_fmt = false;
    audio_clip clip;
    size_t     pos = 12;
    while (pos + 8 <= data.size()) {
        const uint32_t size = le32(p + pos + 4);
        const size_t   body = pos + 8;
        if (body + size > data.size()) {
            throw error(errc::parse_error, path.string() + ": truncated chunk");
        }
        if (std::memcmp(p + pos, "fmt ", 4) == 0) {
            if (size < 16) {
                throw error(errc::parse_error, path.string() + ": short fmt chunk");
            }
            const uint16_t format   = le16(p + body);
            const uint16_t channels = le16(p + body + 2);
            const uint32_t rate     = le32(p + body + 4);
            const uint16_t bits     = le16(p + body + 14);
            if (format != 1 || bits != 16) {
                throw error(errc::parse_error, path.string() + ": only 16-bit PCM is supported");
            }
            if (channels != 1) {
                throw error(errc::parse_error, path.string() + ": only mono audio is supported");
            }
            if (rate == 0) {
                throw error(errc::parse_error, path.string() + ": zero sample rate");
            }
            clip.sample_rate = static_cast<int>(rate);
            have_fmt         = true;
        } else if (std::memcmp(p + pos, "data", 4) == 0) {
            if (!have_fmt) {
                throw error(errc::parse_error, path.string() + ": data chunk before fmt chunk");
            }
            const size_t n = size / 2;
            clip.samples.resize(n);
            for (size_t i = 0; i < n; ++i) {
                const auto v    = static_cast<int16_t>(le16(p + body + 2 * i));
                clip.samples[i] = static_cast<double>(v) / 32768.0;
            }
            return clip;
        }
        pos = body + size + (size & 1);
    }
    throw error(errc::parse_error, path.string() + ": no data chunk");
}

void write_wav(const std::filesystem::path & path, const audio_clip & clip) {
    std::string out;
    const auto  data_bytes = static_cast<uint32_t>(clip.samples.size() * 2);
    out.reserve(44 + data_bytes);
    out += "RIFF";
    put32(out, 36 + data_bytes);
    out += "WAVEfmt ";
    put32(out, 16);
    put16(out, 1);
    put16(out, 1);
    put32(out, static_cast<uint32_t>(clip.sample_rate));
    put32(out, static_cast<uint32_t>(clip.sample_rate) * 2);
    put16(out, 2);
    put16(out, 16);
    out += "data";
    put32(out, data_bytes);
    for (double s : clip.samples) {
        const double c = std::clamp(s, -1.0, 1.0);
        const long   q = std::lround(c * 32768.0);
        put16(out, static_cast<uint16_t>(static_cast<int16_t>(std::clamp(q, -32768L, 32767L))));
    }
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream f(path, std::ios::binary);
    if (!f || !f.write(out.data(), static_cast<std::streamsize>(out.size()))) {
        throw error(errc::io_error, "cannot write " + path.string());
    }
}

} // namespace auralrl
