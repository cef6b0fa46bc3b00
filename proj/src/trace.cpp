#include "auralrl/trace.h"

#include "auralrl/text_metrics.h"

#include <algorithm>
#include <array>
#include <cctype>

namespace auralrl {

namespace {

struct tag_entry {
    tag_kind         kind;
    std::string_view name;
};

constexpr std::array<tag_entry, 15> k_tags = { {
    { tag_kind::think, "THINK" },
    { tag_kind::planning, "PLANNING" },
    { tag_kind::caption, "CAPTION" },
    { tag_kind::env, "ENV" },
    { tag_kind::bgm, "BGM" },
    { tag_kind::speaker, "SPEAKER" },
    { tag_kind::asr, "ASR" },
    { tag_kind::description, "DESCRIPTION" },
    { tag_kind::reasoning, "REASONING" },
    { tag_kind::summary, "SUMMARY" },
    { tag_kind::response, "RESPONSE" },
    { tag_kind::reflect, "REFLECT" },
    { tag_kind::new_response, "NEW_RESPONSE" },
    { tag_kind::final_answer, "FINAL_ANSWER" },
    { tag_kind::pause, "PAUSE" },
} };

struct tag_token {
    bool               closing = false;
    std::string        name;
    size_t             length = 0;
    bool               known  = false;
    tag_kind           kind   = tag_kind::think;
    std::optional<int> reflect_index;
};

bool is_name_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

void classify(tag_token & tok) {
    for (const auto & e : k_tags) {
        if (tok.name == e.name) {
            tok.known = true;
            tok.kind  = e.kind;
            if (e.kind == tag_kind::reflect) {
                tok.reflect_index = 0;
            }
            return;
        }
    }
    constexpr std::string_view reflect = "REFLECT";
    if (tok.name.size() > reflect.size() && tok.name.size() <= reflect.size() + 6 &&
        tok.name.compare(0, reflect.size(), reflect) == 0) {
        const std::string digits = tok.name.substr(reflect.size());
        if (std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            tok.known         = true;
            tok.kind          = tag_kind::reflect;
            tok.reflect_index = std::stoi(digits);
        }
    }
}

// Recognizes `<NAME>` or `</NAME>` at pos.
std::optional<tag_token> lex_tag(std::string_view src, size_t pos) {
    size_t i = pos + 1;
    tag_token tok;
    if (i < src.size() && src[i] == '/') {
        tok.closing = true;
        ++i;
    }
    if (i >= src.size() || !is_name_start(src[i])) {
        return std::nullopt;
    }
    const size_t name_start = i;
    while (i < src.size() && is_name_char(src[i])) {
        ++i;
    }
    if (i >= src.size() || src[i] != '>') {
        return std::nullopt;
    }
    tok.name   = std::string(src.substr(name_start, i - name_start));
    tok.length = i + 1 - pos;
    classify(tok);
    return tok;
}

struct open_frame {
    tag_kind                   kind;
    std::string                name;
    std::optional<int>         reflect_index;
    size_t                     open_start;
    size_t                     content_start;
    std::vector<trace_segment> children;
};

void assign_prefixes(std::string_view src, std::vector<trace_segment> & segs, size_t cursor) {
    for (auto & seg : segs) {
        seg.prefix = std::string(src.substr(cursor, seg.span.start - cursor));
        cursor     = seg.span.end;
        if (seg.kind != tag_kind::pause) {
            assign_prefixes(src, seg.children, seg.span.start + seg.name.size() + 2);
        }
    }
}

void collect(const std::vector<trace_segment> & segs, tag_kind kind, std::vector<const trace_segment *> & out) {
    for (const auto & seg : segs) {
        if (seg.kind == kind) {
            out.push_back(&seg);
        }
        collect(seg.children, kind, out);
    }
}

const trace_segment * first_child(const trace_segment & parent, tag_kind kind) {
    for (const auto & c : parent.children) {
        if (c.kind == kind) {
            return &c;
        }
    }
    return nullptr;
}

std::string to_upper(std::string_view s) {
    std::string out(s);
    for (auto & c : out) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return std::string(s.substr(b, e - b));
}

const choice * find_choice(const std::vector<choice> & choices, std::string_view token) {
    const std::string up = to_upper(token);
    for (const auto & c : choices) {
        if (to_upper(c.label) == up) {
            return &c;
        }
    }
    return nullptr;
}

struct option_ref {
    size_t         pos;
    const choice * which;
};

// "(b)" style references, case-insensitive.
std::vector<option_ref> paren_refs(std::string_view text, const std::vector<choice> & choices) {
    std::vector<option_ref> refs;
    for (size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '(') {
            continue;
        }
        const size_t close = text.find(')', i + 1);
        if (close == std::string_view::npos || close - i - 1 > 8) {
            continue;
        }
        if (const choice * c = find_choice(choices, trim(text.substr(i + 1, close - i - 1)))) {
            refs.push_back({ i, c });
        }
    }
    return refs;
}

struct word_token {
    size_t      pos;
    std::string text;
};

std::vector<word_token> word_tokens(std::string_view text) {
    std::vector<word_token> out;
    size_t                  i = 0;
    while (i < text.size()) {
        if (!std::isalnum(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        const size_t start = i;
        while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        out.push_back({ start, std::string(text.substr(start, i - start)) });
    }
    return out;
}

// Bare label tokens such as "B" or "B.". Lower-case labels count only when the
// whole text is the label, and an upper-case single letter that opens a
// lower-case word ("A bed") is read as an article.
std::vector<option_ref> bare_refs(std::string_view text, const std::vector<choice> & choices) {
    std::vector<option_ref> refs;
    const auto              toks = word_tokens(text);
    for (const auto & t : toks) {
        const choice * c = nullptr;
        for (const auto & ch : choices) {
            if (ch.label == t.text) {
                c = &ch;
            }
        }
        if (c == nullptr && toks.size() == 1) {
            c = find_choice(choices, t.text);
        }
        if (c == nullptr) {
            continue;
        }
        const size_t after = t.pos + t.text.size();
        if (after + 1 < text.size() && text[after] == ' ' &&
            std::islower(static_cast<unsigned char>(text[after + 1]))) {
            continue;
        }
        refs.push_back({ t.pos, c });
    }
    return refs;
}

// Whole-word occurrences of normalized choice text; positions are in the
// normalized string, which preserves relative order.
std::vector<option_ref> text_refs(std::string_view text, const std::vector<choice> & choices) {
    std::vector<option_ref> refs;
    const std::string       hay = " " + normalize_text(text).str() + " ";
    for (const auto & c : choices) {
        const auto needle_norm = normalize_text(c.text);
        if (needle_norm.empty()) {
            continue;
        }
        const std::string needle = " " + needle_norm.str() + " ";
        size_t            pos    = hay.find(needle);
        while (pos != std::string::npos) {
            refs.push_back({ pos, &c });
            pos = hay.find(needle, pos + 1);
        }
    }
    return refs;
}

// "option C", "choice C", "answer C", "answer is C".
std::vector<option_ref> keyword_refs(std::string_view text, const std::vector<choice> & choices) {
    std::vector<option_ref> refs;
    const auto              toks = word_tokens(text);
    for (size_t i = 0; i + 1 < toks.size(); ++i) {
        std::string w = toks[i].text;
        std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
        if (w != "option" && w != "choice" && w != "answer") {
            continue;
        }
        size_t k = i + 1;
        if (w == "answer" && k < toks.size() && toks[k].text == "is" && k + 1 < toks.size()) {
            ++k;
        }
        if (const choice * c = find_choice(choices, toks[k].text)) {
            refs.push_back({ toks[k].pos, c });
        }
    }
    return refs;
}

const choice * earliest(const std::vector<option_ref> & refs) {
    const option_ref * best = nullptr;
    for (const auto & r : refs) {
        if (best == nullptr || r.pos < best->pos) {
            best = &r;
        }
    }
    return best ? best->which : nullptr;
}

std::optional<std::string> match_answer(std::string_view text, const std::vector<choice> & choices) {
    if (choices.empty()) {
        std::string t = trim(text);
        if (t.empty()) {
            return std::nullopt;
        }
        return t;
    }
    for (auto * finder : { &paren_refs, &bare_refs, &text_refs }) {
        if (const choice * c = earliest((*finder)(text, choices))) {
            return c->label;
        }
    }
    return std::nullopt;
}

std::optional<std::string> last_reference(std::string_view text, const std::vector<choice> & choices) {
    // Positions from text_refs live in normalized space; order them separately
    // and prefer explicit letter references when both kinds exist.
    std::vector<option_ref> explicit_refs = paren_refs(text, choices);
    const auto              kw            = keyword_refs(text, choices);
    explicit_refs.insert(explicit_refs.end(), kw.begin(), kw.end());
    const auto textual = text_refs(text, choices);

    auto last_of = [](const std::vector<option_ref> & refs) -> const option_ref * {
        const option_ref * best = nullptr;
        for (const auto & r : refs) {
            if (best == nullptr || r.pos >= best->pos) {
                best = &r;
            }
        }
        return best;
    };
    const option_ref * e = last_of(explicit_refs);
    const option_ref * t = last_of(textual);
    if (e == nullptr && t == nullptr) {
        return std::nullopt;
    }
    if (e == nullptr) {
        return t->which->label;
    }
    if (t == nullptr) {
        return e->which->label;
    }
    // Map the raw position of the explicit reference into normalized space by
    // normalizing the prefix before it.
    const size_t e_norm = normalize_text(text.substr(0, e->pos)).str().size() + 1;
    return (t->pos > e_norm ? t->which : e->which)->label;
}

bool is_label_token(std::string_view tok, bool after_speaker_word) {
    if (tok.empty() || tok.size() > 6) {
        return false;
    }
    if (after_speaker_word) {
        return true;
    }
    if (!std::isupper(static_cast<unsigned char>(tok[0]))) {
        return false;
    }
    return std::all_of(tok.begin() + 1, tok.end(), [](char c) { return c >= '0' && c <= '9'; });
}

struct quote_style {
    std::string_view open;
    std::string_view close;
    bool             apostrophe_like; // close only when not followed by a letter or digit
};

constexpr std::array<quote_style, 4> k_quotes = { {
    { "'", "'", true },
    { "\"", "\"", false },
    { "\xE2\x80\x98", "\xE2\x80\x99", true },  // ‘ ’
    { "\xE2\x80\x9C", "\xE2\x80\x9D", false }, // “ ”
} };

// Label immediately preceding an opening quote at `pos`, if any.
std::optional<std::string> label_before(std::string_view text, size_t pos) {
    size_t i = pos;
    while (i > 0 && (text[i - 1] == ' ' || text[i - 1] == '\t')) {
        --i;
    }
    if (i == 0) {
        return std::nullopt;
    }
    if (text[i - 1] == ']') {
        const size_t open = text.rfind('[', i - 1);
        if (open == std::string_view::npos) {
            return std::nullopt;
        }
        std::string label = trim(text.substr(open + 1, i - 2 - open));
        if (label.empty() || label.size() > 16) {
            return std::nullopt;
        }
        return label;
    }
    if (text[i - 1] != ':') {
        return std::nullopt;
    }
    size_t end = i - 1;
    while (end > 0 && text[end - 1] == ' ') {
        --end;
    }
    size_t start = end;
    while (start > 0 && is_name_char(text[start - 1])) {
        --start;
    }
    const std::string_view tok = text.substr(start, end - start);
    size_t                 s   = start;
    while (s > 0 && text[s - 1] == ' ') {
        --s;
    }
    bool after_speaker = false;
    if (s >= 7) {
        std::string word(text.substr(s - 7, 7));
        std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });
        after_speaker = word == "speaker" && (s == 7 || !is_name_char(text[s - 8])) && s < start;
    }
    if (!after_speaker && start > 0 && is_name_char(text[start - 1])) {
        return std::nullopt;
    }
    if (!is_label_token(tok, after_speaker)) {
        return std::nullopt;
    }
    return std::string(tok);
}

} // namespace

std::string_view tag_name(tag_kind kind) {
    for (const auto & e : k_tags) {
        if (e.kind == kind) {
            return e.name;
        }
    }
    return "";
}

std::string open_literal(tag_kind kind, std::optional<int> reflect_index) {
    std::string name(tag_name(kind));
    if (kind == tag_kind::reflect && reflect_index && *reflect_index > 0) {
        name += std::to_string(*reflect_index);
    }
    return "<" + name + ">";
}

std::string close_literal(tag_kind kind, std::optional<int> reflect_index) {
    return "</" + open_literal(kind, reflect_index).substr(1);
}

std::string trace_segment::render() const {
    if (kind == tag_kind::pause) {
        return "<" + name + ">";
    }
    return "<" + name + ">" + text + "</" + name + ">";
}

std::string trace_document::render() const {
    std::string out;
    for (const auto & seg : segments) {
        out += seg.prefix;
        out += seg.render();
    }
    out += trailing_text;
    return out;
}

trace_document parse_trace(std::string_view src) {
    trace_document             doc;
    std::vector<open_frame>    stack;
    std::vector<trace_segment> top;

    auto container = [&]() -> std::vector<trace_segment> & {
        return stack.empty() ? top : stack.back().children;
    };
    // Drop the innermost frame; its finished children move to the enclosing level.
    auto abandon_top = [&]() {
        auto orphans = std::move(stack.back().children);
        stack.pop_back();
        auto & dst = container();
        for (auto & c : orphans) {
            dst.push_back(std::move(c));
        }
    };

    size_t pos = 0;
    while ((pos = src.find('<', pos)) != std::string_view::npos) {
        auto tok = lex_tag(src, pos);
        if (!tok) {
            ++pos;
            continue;
        }
        const source_span tag_span{ pos, pos + tok->length };
        if (!tok->known) {
            doc.malformed.push_back({ tag_span, "unknown tag <" + std::string(tok->closing ? "/" : "") + tok->name + ">" });
        } else if (!tok->closing && tok->kind == tag_kind::pause) {
            trace_segment seg;
            seg.kind = tag_kind::pause;
            seg.name = tok->name;
            seg.span = tag_span;
            container().push_back(std::move(seg));
        } else if (tok->closing && tok->kind == tag_kind::pause) {
            doc.malformed.push_back({ tag_span, "PAUSE is a standalone tag and takes no close tag" });
        } else if (!tok->closing) {
            stack.push_back({ tok->kind, tok->name, tok->reflect_index, pos, tag_span.end, {} });
        } else {
            auto it = std::find_if(stack.rbegin(), stack.rend(), [&](const open_frame & f) { return f.name == tok->name; });
            if (it == stack.rend()) {
                if (stack.empty()) {
                    doc.malformed.push_back({ tag_span, "unbalanced close </" + tok->name + ">" });
                } else {
                    doc.malformed.push_back({ { stack.back().open_start, tag_span.end },
                                              "mismatched close </" + tok->name + "> for <" + stack.back().name + ">" });
                    abandon_top();
                }
            } else {
                const size_t depth = static_cast<size_t>(std::distance(it, stack.rend())) - 1;
                while (stack.size() > depth + 1) {
                    doc.malformed.push_back({ { stack.back().open_start, stack.back().content_start },
                                              "unclosed <" + stack.back().name + ">" });
                    abandon_top();
                }
                open_frame    frame = std::move(stack.back());
                stack.pop_back();
                trace_segment seg;
                seg.kind          = frame.kind;
                seg.name          = frame.name;
                seg.reflect_index = frame.reflect_index;
                seg.text          = std::string(src.substr(frame.content_start, pos - frame.content_start));
                seg.children      = std::move(frame.children);
                seg.span          = { frame.open_start, tag_span.end };
                container().push_back(std::move(seg));
            }
        }
        pos = tag_span.end;
    }
    while (!stack.empty()) {
        doc.malformed.push_back({ { stack.back().open_start, stack.back().content_start }, "unclosed <" + stack.back().name + ">" });
        abandon_top();
    }

    std::sort(doc.malformed.begin(), doc.malformed.end(),
              [](const malformed_tag & a, const malformed_tag & b) { return a.span.start < b.span.start; });
    doc.segments = std::move(top);
    assign_prefixes(src, doc.segments, 0);
    const size_t tail_start = doc.segments.empty() ? 0 : doc.segments.back().span.end;
    doc.trailing_text       = std::string(src.substr(tail_start));
    return doc;
}

std::vector<const trace_segment *> find_all(const trace_document & doc, tag_kind kind) {
    std::vector<const trace_segment *> out;
    collect(doc.segments, kind, out);
    return out;
}

const trace_segment * find_last(const trace_document & doc, tag_kind kind) {
    const auto all = find_all(doc, kind);
    return all.empty() ? nullptr : all.back();
}

format_report check_format(const trace_document & doc) {
    format_report        rep;
    const trace_segment * think       = nullptr;
    size_t               n_think     = 0;
    size_t               n_response  = 0;
    size_t               n_final     = 0;
    bool                 answer_seen = false;
    for (const auto & seg : doc.segments) {
        if (seg.kind == tag_kind::think) {
            ++n_think;
            if (think == nullptr) {
                think = &seg;
            }
            if (answer_seen) {
                rep.order_violation = true;
            }
        } else if (seg.kind == tag_kind::response || seg.kind == tag_kind::final_answer) {
            ++(seg.kind == tag_kind::response ? n_response : n_final);
            answer_seen = true;
        }
    }
    if (n_think == 0) {
        rep.missing_tags.push_back(tag_kind::think);
    }
    if (n_response + n_final == 0) {
        rep.missing_tags.push_back(tag_kind::response);
    }
    rep.weak_ok = n_think == 1 && n_response <= 1 && n_final <= 1 && n_response + n_final >= 1 && !rep.order_violation;

    bool strict_parts = false;
    if (think != nullptr) {
        const trace_segment * caption = first_child(*think, tag_kind::caption);
        if (caption == nullptr) {
            rep.missing_tags.push_back(tag_kind::caption);
        } else {
            const bool env     = first_child(*caption, tag_kind::env) || first_child(*caption, tag_kind::bgm);
            const bool speaker = first_child(*caption, tag_kind::speaker) != nullptr;
            const bool asr     = first_child(*caption, tag_kind::asr) != nullptr;
            if (!env) {
                rep.missing_tags.push_back(tag_kind::env);
            }
            if (!speaker) {
                rep.missing_tags.push_back(tag_kind::speaker);
            }
            if (!asr) {
                rep.missing_tags.push_back(tag_kind::asr);
            }
            strict_parts = env && speaker && asr;
        }
    }
    rep.strict_ok = rep.weak_ok && strict_parts;
    return rep;
}

std::vector<choice> choices_from_labels(const std::vector<std::string> & labels) {
    std::vector<choice> out;
    out.reserve(labels.size());
    for (const auto & l : labels) {
        out.push_back({ l, "" });
    }
    return out;
}

answer_extraction extract_answer(const trace_document & doc, const std::vector<choice> & choices) {
    constexpr std::array<std::pair<tag_kind, answer_source>, 3> order = { {
        { tag_kind::final_answer, answer_source::final_answer },
        { tag_kind::new_response, answer_source::final_answer },
        { tag_kind::response, answer_source::response },
    } };
    for (const auto & [kind, source] : order) {
        if (const trace_segment * seg = find_last(doc, kind)) {
            if (auto ans = match_answer(seg->text, choices)) {
                return { *ans, source };
            }
        }
    }
    return {};
}

std::vector<speaker_quote> scan_speaker_quotes(std::string_view text) {
    std::vector<speaker_quote> out;
    size_t                     pos = 0;
    while (pos < text.size()) {
        const quote_style * style = nullptr;
        for (const auto & q : k_quotes) {
            if (text.compare(pos, q.open.size(), q.open) == 0) {
                style = &q;
                break;
            }
        }
        if (style == nullptr) {
            ++pos;
            continue;
        }
        auto label = label_before(text, pos);
        if (!label) {
            pos += style->open.size();
            continue;
        }
        const size_t body  = pos + style->open.size();
        size_t       close = body;
        bool         found = false;
        while ((close = text.find(style->close, close)) != std::string_view::npos) {
            const size_t after = close + style->close.size();
            if (!style->apostrophe_like || after >= text.size() ||
                !std::isalnum(static_cast<unsigned char>(text[after]))) {
                found = true;
                break;
            }
            close = after;
        }
        if (!found) {
            break;
        }
        std::string quote = trim(text.substr(body, close - body));
        if (!quote.empty()) {
            out.push_back({ *label, std::move(quote) });
        }
        pos = close + style->close.size();
    }
    return out;
}

std::vector<speaker_quote> extract_speaker_quotes(const trace_document & doc) {
    std::vector<const trace_segment *> sources;
    for (const auto * s : find_all(doc, tag_kind::speaker)) {
        sources.push_back(s);
    }
    for (const auto * s : find_all(doc, tag_kind::reasoning)) {
        sources.push_back(s);
    }
    std::sort(sources.begin(), sources.end(),
              [](const trace_segment * a, const trace_segment * b) { return a->span.start < b->span.start; });
    std::vector<speaker_quote> out;
    for (const auto * seg : sources) {
        auto q = scan_speaker_quotes(seg->text);
        out.insert(out.end(), q.begin(), q.end());
    }
    return out;
}

std::optional<std::string> extract_conclusion(const trace_document & doc, const std::vector<choice> & choices) {
    if (choices.empty()) {
        return std::nullopt;
    }
    if (const trace_segment * summary = find_last(doc, tag_kind::summary)) {
        if (auto ref = last_reference(summary->text, choices)) {
            return ref;
        }
    }
    if (const trace_segment * reasoning = find_last(doc, tag_kind::reasoning)) {
        std::string_view text = reasoning->text;
        // Last non-empty line.
        size_t end = text.size();
        while (end > 0) {
            size_t start = text.rfind('\n', end - 1);
            start        = start == std::string_view::npos ? 0 : start + 1;
            const std::string line = trim(text.substr(start, end - start));
            if (!line.empty()) {
                return last_reference(line, choices);
            }
            if (start == 0) {
                break;
            }
            end = start - 1;
        }
    }
    return std::nullopt;
}

bool has_trailing_after_final(const trace_document & doc) {
    const trace_segment * fin = find_last(doc, tag_kind::final_answer);
    if (fin == nullptr) {
        return false;
    }
    const std::string all = doc.render();
    for (size_t i = fin->span.end; i < all.size(); ++i) {
        if (!std::isspace(static_cast<unsigned char>(all[i]))) {
            return true;
        }
    }
    return false;
}

} // namespace auralrl
