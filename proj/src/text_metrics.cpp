#include "auralrl/text_metrics.h"

#include "auralrl/error.h"

#include <algorithm>
#include <cwctype>
#include <locale.h>
#include <unordered_map>

namespace auralrl {

namespace {

locale_t utf8_locale() {
    static const locale_t loc = [] {
        locale_t l = newlocale(LC_ALL_MASK, "C.UTF-8", static_cast<locale_t>(0));
        if (l == static_cast<locale_t>(0)) {
            l = newlocale(LC_ALL_MASK, "C", static_cast<locale_t>(0));
        }
        return l;
    }();
    return loc;
}

bool is_space_cp(char32_t c) {
    if (c < 0x80) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    }
    return iswspace_l(static_cast<wint_t>(c), utf8_locale()) != 0;
}

bool is_alnum_cp(char32_t c) {
    if (c < 0x80) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    }
    return iswalnum_l(static_cast<wint_t>(c), utf8_locale()) != 0;
}

char32_t to_lower_cp(char32_t c) {
    if (c < 0x80) {
        return (c >= 'A' && c <= 'Z') ? c + 32 : c;
    }
    return static_cast<char32_t>(towlower_l(static_cast<wint_t>(c), utf8_locale()));
}

void find_blocks(std::u32string_view a, std::u32string_view b,
                 const std::unordered_map<char32_t, std::vector<size_t>> & b2j,
                 size_t alo, size_t ahi, size_t blo, size_t bhi,
                 std::vector<size_t> & j2len, std::vector<size_t> & next_j2len,
                 std::vector<matching_block> & out) {
    if (alo >= ahi || blo >= bhi) {
        return;
    }
    // j2len[j + 1] holds the length of the match ending at a[i - 1], b[j].
    size_t best_i = alo, best_j = blo, best_size = 0;
    std::vector<size_t> touched, next_touched;
    for (size_t i = alo; i < ahi; ++i) {
        next_touched.clear();
        auto it = b2j.find(a[i]);
        if (it != b2j.end()) {
            for (size_t j : it->second) {
                if (j < blo) {
                    continue;
                }
                if (j >= bhi) {
                    break;
                }
                const size_t k = j2len[j] + 1;
                next_j2len[j + 1] = k;
                next_touched.push_back(j + 1);
                if (k > best_size) {
                    best_i    = i + 1 - k;
                    best_j    = j + 1 - k;
                    best_size = k;
                }
            }
        }
        for (size_t t : touched) {
            j2len[t] = 0;
        }
        std::swap(j2len, next_j2len);
        std::swap(touched, next_touched);
    }
    for (size_t t : touched) {
        j2len[t] = 0;
    }
    if (best_size == 0) {
        return;
    }
    find_blocks(a, b, b2j, alo, best_i, blo, best_j, j2len, next_j2len, out);
    out.push_back({ best_i, best_j, best_size });
    find_blocks(a, b, b2j, best_i + best_size, ahi, best_j + best_size, bhi, j2len, next_j2len, out);
}

template <typename Seq>
size_t edit_distance_impl(const Seq & a, const Seq & b) {
    if (a.size() < b.size()) {
        return edit_distance_impl(b, a);
    }
    std::vector<size_t> row(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) {
        row[j] = j;
    }
    for (size_t i = 1; i <= a.size(); ++i) {
        size_t diag = row[0];
        row[0]      = i;
        for (size_t j = 1; j <= b.size(); ++j) {
            const size_t up   = row[j];
            const size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
            row[j]            = std::min({ up + 1, row[j - 1] + 1, diag + cost });
            diag              = up;
        }
    }
    return row[b.size()];
}

} // namespace

std::u32string utf8_decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        const auto c0 = static_cast<unsigned char>(s[i]);
        size_t   len  = 0;
        char32_t cp   = 0;
        if (c0 < 0x80) {
            len = 1;
            cp  = c0;
        } else if ((c0 & 0xE0) == 0xC0) {
            len = 2;
            cp  = c0 & 0x1F;
        } else if ((c0 & 0xF0) == 0xE0) {
            len = 3;
            cp  = c0 & 0x0F;
        } else if ((c0 & 0xF8) == 0xF0) {
            len = 4;
            cp  = c0 & 0x07;
        }
        bool ok = len > 0 && i + len <= s.size();
        for (size_t k = 1; ok && k < len; ++k) {
            const auto ck = static_cast<unsigned char>(s[i + k]);
            if ((ck & 0xC0) != 0x80) {
                ok = false;
            } else {
                cp = (cp << 6) | (ck & 0x3F);
            }
        }
        if (!ok) {
            out.push_back(U'�');
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string utf8_encode(std::u32string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t c : s) {
        if (c < 0x80) {
            out.push_back(static_cast<char>(c));
        } else if (c < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (c >> 6)));
            out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
        } else if (c < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (c >> 12)));
            out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (c >> 18)));
            out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
        }
    }
    return out;
}

normalized_text normalize_text(std::string_view raw) {
    normalized_text out;
    bool pending_space = false;
    for (char32_t c : utf8_decode(raw)) {
        if (is_space_cp(c)) {
            pending_space = !out.cps_.empty();
        } else if (is_alnum_cp(c)) {
            if (pending_space) {
                out.cps_.push_back(U' ');
                pending_space = false;
            }
            out.cps_.push_back(to_lower_cp(c));
        }
    }
    out.utf8_ = utf8_encode(out.cps_);
    return out;
}

std::vector<matching_block> matching_blocks(std::u32string_view a, std::u32string_view b) {
    std::unordered_map<char32_t, std::vector<size_t>> b2j;
    for (size_t j = 0; j < b.size(); ++j) {
        b2j[b[j]].push_back(j);
    }
    std::vector<size_t>         j2len(b.size() + 1, 0), next_j2len(b.size() + 1, 0);
    std::vector<matching_block> out;
    find_blocks(a, b, b2j, 0, a.size(), 0, b.size(), j2len, next_j2len, out);
    return out;
}

double seq_ratio(std::u32string_view a, std::u32string_view b) {
    const size_t total = a.size() + b.size();
    if (total == 0) {
        return 1.0;
    }
    size_t matched = 0;
    for (const auto & m : matching_blocks(a, b)) {
        matched += m.size;
    }
    return 2.0 * static_cast<double>(matched) / static_cast<double>(total);
}

double seq_ratio(const normalized_text & a, const normalized_text & b) {
    return seq_ratio(a.code_points(), b.code_points());
}

size_t edit_distance(std::u32string_view a, std::u32string_view b) {
    return edit_distance_impl(a, b);
}

size_t edit_distance(const std::vector<std::string> & a, const std::vector<std::string> & b) {
    return edit_distance_impl(a, b);
}

double levenshtein_similarity(const normalized_text & a, const normalized_text & b) {
    const size_t longest = std::max(a.size(), b.size());
    if (longest == 0) {
        return 1.0;
    }
    const size_t d = edit_distance(a.code_points(), b.code_points());
    return 1.0 - static_cast<double>(d) / static_cast<double>(longest);
}

qpt_score qpt(const std::vector<std::string> & attributed, const std::vector<std::string> & asr_snippets) {
    if (attributed.empty()) {
        throw error(errc::empty_input, "qpt: no attributed sentences");
    }
    if (asr_snippets.empty()) {
        throw error(errc::empty_input, "qpt: no ASR snippets");
    }
    std::vector<normalized_text> asr;
    asr.reserve(asr_snippets.size());
    for (const auto & s : asr_snippets) {
        asr.push_back(normalize_text(s));
    }
    qpt_score score;
    double    sum = 0.0;
    for (size_t i = 0; i < attributed.size(); ++i) {
        const auto sentence = normalize_text(attributed[i]);
        size_t     best_j   = 0;
        double     best     = -1.0;
        for (size_t j = 0; j < asr.size(); ++j) {
            const double phi = seq_ratio(sentence, asr[j]);
            if (phi > best) {
                best   = phi;
                best_j = j;
            }
        }
        score.per_sentence.push_back({ i, best_j, best });
        sum += best;
    }
    score.value = sum / static_cast<double>(attributed.size());
    return score;
}

std::vector<std::string> split_words(const normalized_text & text) {
    std::vector<std::string> words;
    const std::string &      s = text.str();
    size_t                   start = 0;
    while (start < s.size()) {
        size_t end = s.find(' ', start);
        if (end == std::string::npos) {
            end = s.size();
        }
        if (end > start) {
            words.push_back(s.substr(start, end - start));
        }
        start = end + 1;
    }
    return words;
}

error_counts error_rate_counts(std::string_view reference, std::string_view hypothesis, error_unit unit) {
    const auto ref = normalize_text(reference);
    const auto hyp = normalize_text(hypothesis);
    error_counts counts;
    if (unit == error_unit::word) {
        const auto rw = split_words(ref);
        const auto hw = split_words(hyp);
        counts.ref_units = rw.size();
        if (counts.ref_units > 0) {
            counts.edits = edit_distance(rw, hw);
        }
    } else {
        auto strip = [](const std::u32string & s) {
            std::u32string out;
            std::copy_if(s.begin(), s.end(), std::back_inserter(out), [](char32_t c) { return c != U' '; });
            return out;
        };
        const auto rc = strip(ref.code_points());
        const auto hc = strip(hyp.code_points());
        counts.ref_units = rc.size();
        if (counts.ref_units > 0) {
            counts.edits = edit_distance(rc, hc);
        }
    }
    if (counts.ref_units == 0) {
        throw error(errc::empty_reference, "error rate: reference is empty after normalization");
    }
    return counts;
}

double wer(std::string_view reference, std::string_view hypothesis, error_unit unit) {
    const auto c = error_rate_counts(reference, hypothesis, unit);
    return static_cast<double>(c.edits) / static_cast<double>(c.ref_units);
}

} // namespace auralrl
