#pragma once

#include <cstdint>
#include <vector>

namespace auralrl {

struct audio_clip {
    std::vector<double> samples;
    int                 sample_rate = 16000;

    size_t size() const noexcept { return samples.size(); }
    double duration_s() const noexcept { return static_cast<double>(samples.size()) / sample_rate; }
};

enum class noise_alignment { loop_noise, truncate_noise };

struct mix_spec {
    double          snr_db = 10.0;
    uint64_t        seed   = 0;
    noise_alignment align  = noise_alignment::loop_noise;
};

inline constexpr double k_min_snr_db = 0.0;
inline constexpr double k_max_snr_db = 20.0;

// Clips whose mean power is at or below this (-100 dBFS) count as silent.
inline constexpr double k_silence_power = 1e-10;

// Speech is scaled to this RMS before the noise gain is applied.
inline constexpr double k_speech_rms_target = 0.1;

// Peak level used when a mix has to be pulled back below full scale.
inline constexpr double k_peak_ceiling = 0.99;

double rms_power(const audio_clip & clip);

// k such that 10*log10(p_signal / (k^2 * p_noise)) == snr_db.
double snr_gain(double p_signal, double p_noise, double snr_db);

double measure_snr(const audio_clip & speech, const audio_clip & scaled_noise);

struct mix_result {
    audio_clip mixture;      // after master gain
    audio_clip speech;       // normalized speech, after master gain
    audio_clip scaled_noise; // aligned noise times the SNR gain, before master gain
    double     noise_gain  = 1.0;
    double     master_gain = 1.0;
    size_t     noise_offset = 0;
};

void validate_snr(double snr_db);

mix_result mix_at_snr(const audio_clip & speech, const audio_clip & noise, const mix_spec & spec);

} // namespace auralrl
