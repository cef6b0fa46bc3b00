#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace auralrl {

// Lower-cased text holding only letters, digits and single interior spaces.
// Constructed only through normalize_text().
class normalized_text {
  public:
    normalized_text() = default;

    const std::string &    str() const noexcept { return utf8_; }
    const std::u32string & code_points() const noexcept { return cps_; }
    size_t                 size() const noexcept { return cps_.size(); }
    bool                   empty() const noexcept { return cps_.empty(); }

    bool operator==(const normalized_text & other) const { return cps_ == other.cps_; }

  private:
    friend normalized_text normalize_text(std::string_view raw);

    std::string    utf8_;
    std::u32string cps_;
};

normalized_text normalize_text(std::string_view raw);

// UTF-8 helpers. Invalid bytes decode to U+FFFD.
std::u32string utf8_decode(std::string_view s);
std::string    utf8_encode(std::u32string_view s);

// Ratcliff/Obershelp similarity: 2*M / (|a|+|b|) where M is the total size of the
// recursively found longest matching blocks. 1.0 when both are empty.
double seq_ratio(const normalized_text & a, const normalized_text & b);
double seq_ratio(std::u32string_view a, std::u32string_view b);

struct matching_block {
    size_t a_pos;
    size_t b_pos;
    size_t size;
};

// Matching blocks in increasing a order; ties for the longest block go to the
// lowest a index, then the lowest b index.
std::vector<matching_block> matching_blocks(std::u32string_view a, std::u32string_view b);

size_t edit_distance(std::u32string_view a, std::u32string_view b);
size_t edit_distance(const std::vector<std::string> & a, const std::vector<std::string> & b);

// 1 - edit_distance / max(|a|, |b|); 1.0 when both are empty.
double levenshtein_similarity(const normalized_text & a, const normalized_text & b);

struct qpt_sentence {
    size_t sentence;
    size_t best_asr;
    double phi;
};

struct qpt_score {
    double                    value = 0.0;
    std::vector<qpt_sentence> per_sentence;
};

// Mean over attributed sentences of the best SeqRatio against any ASR snippet.
// Throws errc::empty_input when either list is empty.
qpt_score qpt(const std::vector<std::string> & attributed, const std::vector<std::string> & asr_snippets);

enum class error_unit { word, character };

struct error_counts {
    size_t edits     = 0;
    size_t ref_units = 0;
};

// Edit operations between normalized token sequences. Characters exclude spaces.
// Throws errc::empty_reference when the reference has no units.
error_counts error_rate_counts(std::string_view reference, std::string_view hypothesis, error_unit unit);

double wer(std::string_view reference, std::string_view hypothesis, error_unit unit = error_unit::word);

std::vector<std::string> split_words(const normalized_text & text);

} // namespace auralrl
