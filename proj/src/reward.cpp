#include "auralrl/reward.h"

#include "auralrl/error.h"

#include <algorithm>
#include <cmath>

namespace auralrl {

void reward_weights::validate() const {
    for (double w : { w_acc, w_cons, w_fmt, w_len, lambda_fid, lambda_align }) {
        if (!std::isfinite(w) || w < 0.0) {
            throw error(errc::invalid_config, "reward weights must be finite and non-negative");
        }
    }
    if (std::abs(lambda_fid + lambda_align - 1.0) > 1e-9) {
        throw error(errc::invalid_config, "lambda_fid + lambda_align must equal 1");
    }
}

void length_params::validate() const {
    if (!(0 < t_min && t_min < t_max)) {
        throw error(errc::invalid_config, "length params need 0 < t_min < t_max");
    }
}

double accuracy_reward(const trace_document & doc, const std::string & gold, const std::vector<choice> & choices) {
    const auto ans = extract_answer(doc, choices);
    return ans.source != answer_source::none && ans.answer == gold ? 1.0 : 0.0;
}

double format_reward(const format_report & report) {
    return report.weak_ok ? 1.0 : 0.0;
}

consistency_terms consistency_reward(const trace_document & doc, const paqa_item & item, const reward_weights & weights) {
    consistency_terms c;
    c.r_bgs = (item.qtype == question_type::speech && find_noise_misuse(doc, item)) ? 0.0 : 1.0;

    // Fidelity is only defined inside a THINK block; without one there is no
    // reasoning to verify.
    if (!find_all(doc, tag_kind::think).empty()) {
        const auto quotes = extract_speaker_quotes(doc);
        if (quotes.empty()) {
            c.r_fid = 1.0;
        } else {
            std::vector<normalized_text> asr;
            for (const auto & a : item.asr) {
                asr.push_back(normalize_text(a));
            }
            double sum = 0.0;
            for (const auto & q : quotes) {
                const auto s    = normalize_text(q.quote);
                double     best = 0.0;
                for (const auto & a : asr) {
                    best = std::max(best, levenshtein_similarity(s, a));
                }
                sum += best;
            }
            c.r_fid = sum / static_cast<double>(quotes.size());
        }
    }

    const auto answer     = extract_answer(doc, item.choices);
    const auto conclusion = extract_conclusion(doc, item.choices);
    c.r_align = (answer.source != answer_source::none && conclusion && *conclusion == answer.answer) ? 1.0 : 0.0;

    c.r_cons = c.r_bgs * (weights.lambda_fid * c.r_fid + weights.lambda_align * c.r_align);
    return c;
}

double length_reward(long len, bool trailing_after_final, const length_params & p) {
    if (trailing_after_final) {
        return 0.0;
    }
    if (len < 0) {
        len = 0;
    }
    if (len < p.t_min) {
        return static_cast<double>(len) / p.t_min;
    }
    if (len <= p.t_max) {
        return 1.0;
    }
    return std::max(0.0, 1.0 - static_cast<double>(len - p.t_max) / p.t_max);
}

double combine_reward(const reward_breakdown & b, const reward_weights & w) {
    return w.w_acc * b.r_acc + w.w_cons * b.r_cons + w.w_fmt * b.r_fmt + w.w_len * (b.r_acc * b.r_len);
}

reward_breakdown total_reward(const trace_document & doc, const paqa_item & item, const reward_weights & weights,
                              const length_params & length, long token_count, bool trailing) {
    reward_breakdown b;
    b.r_acc         = accuracy_reward(doc, item.gold, item.choices);
    b.r_fmt         = format_reward(check_format(doc));
    const auto cons = consistency_reward(doc, item, weights);
    b.r_bgs         = cons.r_bgs;
    b.r_fid         = cons.r_fid;
    b.r_align       = cons.r_align;
    b.r_cons        = cons.r_cons;
    b.r_len         = length_reward(token_count, trailing, length);
    b.total         = combine_reward(b, weights);
    return b;
}

nlohmann::ordered_json breakdown_to_json(const reward_breakdown & b) {
    return { { "r_acc", b.r_acc },   { "r_fmt", b.r_fmt },   { "r_bgs", b.r_bgs }, { "r_fid", b.r_fid },
             { "r_align", b.r_align }, { "r_cons", b.r_cons }, { "r_len", b.r_len }, { "total", b.total } };
}

} // namespace auralrl
