#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace auralrl {

enum class tag_kind {
    think,
    planning,
    caption,
    env,
    bgm,
    speaker,
    asr,
    description,
    reasoning,
    summary,
    response,
    reflect,
    new_response,
    final_answer,
    pause,
};

// Canonical upper-case tag name without brackets, e.g. "FINAL_ANSWER".
std::string_view tag_name(tag_kind kind);
std::string      open_literal(tag_kind kind, std::optional<int> reflect_index = std::nullopt);
std::string      close_literal(tag_kind kind, std::optional<int> reflect_index = std::nullopt);

struct source_span {
    size_t start = 0;
    size_t end   = 0;
};

struct trace_segment {
    tag_kind                   kind = tag_kind::think;
    std::string                name;          // tag name as written (keeps REFLECT suffixes)
    std::optional<int>         reflect_index; // set for REFLECT only; unsuffixed is 0
    std::string                text;          // raw content between open and close tags
    std::vector<trace_segment> children;      // well-formed tags nested inside text
    source_span                span;          // covers the open tag through the close tag
    std::string                prefix;        // raw text between the previous sibling and this tag

    std::string render() const;
};

struct malformed_tag {
    source_span span;
    std::string reason;
};

struct trace_document {
    std::vector<trace_segment> segments;
    std::string                trailing_text;
    std::vector<malformed_tag> malformed;

    std::string render() const;
};

// Total: never throws. Unknown, unbalanced or unclosed tags go to `malformed`
// and their text stays in the surrounding content.
trace_document parse_trace(std::string_view source);

// Depth-first, document order.
std::vector<const trace_segment *> find_all(const trace_document & doc, tag_kind kind);
const trace_segment *              find_last(const trace_document & doc, tag_kind kind);

struct format_report {
    bool                  weak_ok         = false;
    bool                  strict_ok       = false;
    std::vector<tag_kind> missing_tags;
    bool                  order_violation = false;
};

format_report check_format(const trace_document & doc);

struct choice {
    std::string label;
    std::string text;
};

std::vector<choice> choices_from_labels(const std::vector<std::string> & labels);

enum class answer_source { final_answer, response, none };

struct answer_extraction {
    std::string   answer;
    answer_source source = answer_source::none;
};

// Precedence inside a tag: "(b)" > bare "B"/"B." token > full choice text.
// FINAL_ANSWER first, then NEW_RESPONSE, then RESPONSE. With no choices the
// trimmed tag text is the answer.
answer_extraction extract_answer(const trace_document & doc, const std::vector<choice> & choices);

struct speaker_quote {
    std::string speaker;
    std::string quote;

    bool operator==(const speaker_quote &) const = default;
};

// Quotes from SPEAKER captions and REASONING lines written as `X: '...'`,
// `Speaker X: "..."` or `[X] '...'`. Curly quotes are accepted.
std::vector<speaker_quote> extract_speaker_quotes(const trace_document & doc);
std::vector<speaker_quote> scan_speaker_quotes(std::string_view text);

// Last option reference in SUMMARY; falls back to the last REASONING line.
std::optional<std::string> extract_conclusion(const trace_document & doc, const std::vector<choice> & choices);

// True when non-whitespace content follows the last </FINAL_ANSWER>.
bool has_trailing_after_final(const trace_document & doc);

} // namespace auralrl
