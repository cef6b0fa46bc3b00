#pragma once

#include "auralrl/audio.h"
#include "auralrl/text_metrics.h"
#include "auralrl/trace.h"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace auralrl {

using ordered_json = nlohmann::ordered_json;

struct speaker_turn {
    std::string speaker_id;
    std::string clip_path;
    std::string transcript;
    double      start_s = 0.0;

    bool operator==(const speaker_turn &) const = default;
};

struct reflection_triplet {
    std::string response;
    std::string reflect;
    std::string final_answer;

    bool operator==(const reflection_triplet &) const = default;
};

// Speech-content questions are the ones where background sound must never be
// used as evidence.
enum class question_type { speech, environment };

struct paqa_item {
    std::string                       id;
    std::string                       audio_path;
    std::string                       question;
    std::vector<choice>               choices;
    std::string                       gold;
    question_type                     qtype = question_type::speech;
    std::optional<std::string>        env_tag;
    std::optional<double>             snr_db;
    std::vector<speaker_turn>         turns;
    std::vector<std::string>          asr;
    std::optional<qpt_score>          qpt;
    std::optional<reflection_triplet> reflection;

    size_t distinct_speakers() const;
};

// Throws errc::invalid_argument when a record invariant does not hold.
void validate_item(const paqa_item & item);

ordered_json item_to_json(const paqa_item & item);
paqa_item    item_from_json(const ordered_json & j);

std::string            serialize_item(const paqa_item & item);
std::vector<paqa_item> read_jsonl(const std::filesystem::path & path);
void                   write_jsonl(const std::filesystem::path & path, const std::vector<paqa_item> & items);

struct qa_spec {
    std::string         question;
    std::vector<choice> choices;
    std::string         gold;
    question_type       qtype = question_type::speech;
};

struct turn_clip {
    std::string speaker_id;
    std::string clip_path;
    audio_clip  clip;
    std::string transcript;
};

// Writes audio under a dataset root and hands out unique ids. Not thread-safe;
// build items in parallel and register them from one thread.
class forge {
  public:
    explicit forge(std::filesystem::path root);

    const std::filesystem::path & root() const noexcept { return root_; }

    // Level 1: speech mixed with environmental noise at a target SNR. Writes the
    // mixture plus `.speech.wav` / `.noise.wav` stems next to it.
    paqa_item build_se_item(const std::string & id, const audio_clip & speech, const audio_clip & noise, const qa_spec & qa,
                            const std::string & env_label, const mix_spec & spec);

    // Level 2: sequential speaker turns separated by gap_ms of silence. QPT scores
    // the turn transcripts against asr_reference (the transcripts themselves when
    // no reference is given).
    paqa_item build_ss_item(const std::string & id, const std::vector<turn_clip> & turns, const qa_spec & qa, double gap_ms,
                            const std::vector<std::string> & asr_reference = {});

  private:
    void claim(const std::string & id);

    std::filesystem::path root_;
    std::set<std::string> ids_;
};

std::filesystem::path stem_path(const std::filesystem::path & mixture, const char * stem);

inline constexpr double k_qpt_threshold = 0.85;

struct qpt_partition {
    std::vector<paqa_item> kept;
    std::vector<paqa_item> dropped;
};

// Keeps items with qpt >= threshold and items that need no score.
qpt_partition qpt_filter(const std::vector<paqa_item> & items, double threshold = k_qpt_threshold);

enum class error_kind { option_mismatch, attribution_mistake, hallucinated_quote, noise_misuse };

std::string_view error_kind_name(error_kind kind);

struct error_report {
    std::set<error_kind>                           kinds;
    std::vector<std::pair<error_kind, std::string>> evidence;

    bool empty() const noexcept { return kinds.empty(); }
    bool has(error_kind k) const { return kinds.count(k) != 0; }
};

inline constexpr double k_hallucination_phi = 0.6;

// Sentence in REASONING that uses an environmental sound as causal support.
std::optional<std::string> find_noise_misuse(const trace_document & doc, const paqa_item & item);

error_report detect_errors(const paqa_item & item, const trace_document & trace);

// Canonical speaker label: "Speaker 1", "S1" and "1" compare equal.
std::string canonical_speaker(std::string_view label);

struct reflection_hook {
    std::string command; // run with /bin/sh -c; item JSON on stdin, reflect text on stdout
};

std::string run_reflection_hook(const reflection_hook & hook, const std::string & stdin_text);

// Renders the reflection from the detected errors, or asks the hook when one is
// given. Stores the triplet on the item.
reflection_triplet build_reflection_triplet(paqa_item & item, const std::string & bad_response, const error_report & report,
                                            const std::optional<reflection_hook> & hook = std::nullopt);

// The extra supervised target a triplet contributes.
std::string render_triplet(const reflection_triplet & t);

} // namespace auralrl
