#include "auralrl/audio.h"

#include "auralrl/error.h"

#include <cmath>
#include <random>
#include <string>

namespace auralrl {

double rms_power(const audio_clip & clip) {
    if (clip.samples.empty()) {
        throw error(errc::empty_clip, "rms_power: clip has no samples");
    }
    double acc = 0.0;
    for (double s : clip.samples) {
        acc += s * s;
    }
    return acc / static_cast<double>(clip.samples.size());
}

double snr_gain(double p_signal, double p_noise, double snr_db) {
    if (!(p_signal > 0.0) || !(p_noise > 0.0)) {
        throw error(errc::non_positive_power, "snr_gain: signal and noise power must be positive");
    }
    return std::sqrt(p_signal / (p_noise * std::pow(10.0, snr_db / 10.0)));
}

double measure_snr(const audio_clip & speech, const audio_clip & scaled_noise) {
    if (speech.size() != scaled_noise.size()) {
        throw error(errc::length_mismatch, "measure_snr: speech and noise lengths differ");
    }
    if (speech.sample_rate != scaled_noise.sample_rate) {
        throw error(errc::sample_rate_mismatch, "measure_snr: sample rates differ");
    }
    const double ps = rms_power(speech);
    const double pn = rms_power(scaled_noise);
    if (!(pn > 0.0)) {
        throw error(errc::non_positive_power, "measure_snr: noise has zero power");
    }
    return 10.0 * std::log10(ps / pn);
}

void validate_snr(double snr_db) {
    if (!(snr_db >= k_min_snr_db && snr_db <= k_max_snr_db)) {
        throw error(errc::snr_out_of_range,
                    "SNR " + std::to_string(snr_db) + " dB is outside the supported range [0, 20] dB");
    }
}

mix_result mix_at_snr(const audio_clip & speech, const audio_clip & noise, const mix_spec & spec) {
    validate_snr(spec.snr_db);
    if (speech.sample_rate != noise.sample_rate) {
        throw error(errc::sample_rate_mismatch, "mix_at_snr: speech is " + std::to_string(speech.sample_rate) +
                                                    " Hz but noise is " + std::to_string(noise.sample_rate) + " Hz");
    }
    if (speech.samples.empty() || noise.samples.empty()) {
        throw error(errc::empty_clip, "mix_at_snr: empty input clip");
    }
    const double ps_raw = rms_power(speech);
    if (ps_raw <= k_silence_power) {
        throw error(errc::silent_input, "mix_at_snr: speech is silent");
    }
    if (rms_power(noise) <= k_silence_power) {
        throw error(errc::silent_input, "mix_at_snr: noise is silent");
    }

    const size_t n = speech.size();
    mix_result   out;
    std::mt19937_64 rng(spec.seed);

    out.speech.sample_rate = speech.sample_rate;
    out.speech.samples.resize(n);
    const double speech_scale = k_speech_rms_target / std::sqrt(ps_raw);
    for (size_t i = 0; i < n; ++i) {
        out.speech.samples[i] = speech.samples[i] * speech_scale;
    }

    audio_clip aligned;
    aligned.sample_rate = noise.sample_rate;
    aligned.samples.resize(n);
    const size_t m = noise.size();
    if (spec.align == noise_alignment::loop_noise) {
        out.noise_offset = std::uniform_int_distribution<size_t>(0, m - 1)(rng);
        for (size_t i = 0; i < n; ++i) {
            aligned.samples[i] = noise.samples[(out.noise_offset + i) % m];
        }
    } else {
        if (m < n) {
            throw error(errc::length_mismatch, "mix_at_snr: noise shorter than speech and alignment is truncate_noise");
        }
        out.noise_offset = std::uniform_int_distribution<size_t>(0, m - n)(rng);
        for (size_t i = 0; i < n; ++i) {
            aligned.samples[i] = noise.samples[out.noise_offset + i];
        }
    }
    // The aligned window, not the whole noise clip, sets the gain.
    const double pn = rms_power(aligned);
    if (pn <= k_silence_power) {
        throw error(errc::silent_input, "mix_at_snr: selected noise window is silent");
    }
    out.noise_gain = snr_gain(rms_power(out.speech), pn, spec.snr_db);

    out.scaled_noise = std::move(aligned);
    for (double & s : out.scaled_noise.samples) {
        s *= out.noise_gain;
    }

    out.mixture.sample_rate = speech.sample_rate;
    out.mixture.samples.resize(n);
    double peak = 0.0;
    for (size_t i = 0; i < n; ++i) {
        out.mixture.samples[i] = out.speech.samples[i] + out.scaled_noise.samples[i];
        peak                   = std::max(peak, std::abs(out.mixture.samples[i]));
    }
    if (peak > 1.0) {
        out.master_gain = k_peak_ceiling / peak;
        for (double & s : out.mixture.samples) {
            s *= out.master_gain;
        }
        for (double & s : out.speech.samples) {
            s *= out.master_gain;
        }
    }
    return out;
}

} // namespace auralrl
