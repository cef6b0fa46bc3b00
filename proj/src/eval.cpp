#include "auralrl/eval.h"

#include "auralrl/error.h"
#include "auralrl/text_metrics.h"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace auralrl {

double mc_accuracy(const std::vector<std::string> & predictions, const std::vector<std::string> & golds) {
    if (predictions.size() != golds.size()) {
        throw error(errc::length_mismatch, "predictions and golds differ in length");
    }
    if (predictions.empty()) {
        throw error(errc::empty_input, "accuracy needs at least one item");
    }
    size_t hits = 0;
    for (size_t i = 0; i < golds.size(); ++i) {
        hits += predictions[i] == golds[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(golds.size());
}

double average_precision(const std::vector<double> & scores, const std::vector<bool> & labels) {
    if (scores.size() != labels.size()) {
        throw error(errc::length_mismatch, "scores and labels differ in length");
    }
    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    size_t hits = 0;
    double sum  = 0.0;
    for (size_t k = 0; k < order.size(); ++k) {
        if (labels[order[k]]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    if (hits == 0) {
        throw error(errc::no_positives, "class has no positive items");
    }
    return sum / static_cast<double>(hits);
}

double map_multilabel(const std::vector<std::vector<double>> & scores, const std::vector<std::vector<bool>> & labels) {
    if (scores.size() != labels.size()) {
        throw error(errc::length_mismatch, "scores and labels differ in item count");
    }
    const size_t n_classes = scores.empty() ? 0 : scores.front().size();
    for (size_t i = 0; i < scores.size(); ++i) {
        if (scores[i].size() != n_classes || labels[i].size() != n_classes) {
            throw error(errc::length_mismatch, "every item needs one score and label per class");
        }
    }
    double sum       = 0.0;
    size_t evaluated = 0;
    for (size_t c = 0; c < n_classes; ++c) {
        std::vector<double> s;
        std::vector<bool>   l;
        bool                any = false;
        for (size_t i = 0; i < scores.size(); ++i) {
            s.push_back(scores[i][c]);
            l.push_back(labels[i][c]);
            any = any || labels[i][c];
        }
        if (!any) {
            continue;
        }
        sum += average_precision(s, l);
        ++evaluated;
    }
    if (evaluated == 0) {
        throw error(errc::no_positives, "no class has a positive item");
    }
    return sum / static_cast<double>(evaluated);
}

eval_report evaluate(const std::vector<paqa_item> & items, const std::vector<trace_document> & traces) {
    if (items.size() != traces.size()) {
        throw error(errc::length_mismatch, "items and traces differ in length");
    }
    eval_report r;
    r.n_items        = items.size();
    size_t aligned   = 0;
    size_t ref_words = 0, word_edits = 0;
    size_t ref_chars = 0, char_edits = 0;
    bool   any_asr   = false;

    for (size_t i = 0; i < items.size(); ++i) {
        const auto & item = items[i];
        const auto & doc  = traces[i];

        const answer_extraction ans = extract_answer(doc, item.choices);
        if (ans.source != answer_source::none) {
            ++r.n_answered;
            if (ans.answer == item.gold) {
                ++r.n_correct;
            }
            const auto conclusion = extract_conclusion(doc, item.choices);
            if (conclusion && *conclusion == ans.answer) {
                ++aligned;
            }
        }

        const trace_segment * asr_tag = find_last(doc, tag_kind::asr);
        if (asr_tag && !item.asr.empty()) {
            std::string reference;
            for (const auto & s : item.asr) {
                reference += (reference.empty() ? "" : " ") + s;
            }
            if (normalize_text(reference).empty()) {
                continue;
            }
            const auto w = error_rate_counts(reference, asr_tag->text, error_unit::word);
            const auto c = error_rate_counts(reference, asr_tag->text, error_unit::character);
            ref_words += w.ref_units;
            word_edits += w.edits;
            ref_chars += c.ref_units;
            char_edits += c.edits;
            any_asr = true;
        }
    }
    if (r.n_items > 0) {
        r.accuracy = static_cast<double>(r.n_correct) / static_cast<double>(r.n_items);
    }
    if (r.n_answered > 0) {
        r.consistency_rate = static_cast<double>(aligned) / static_cast<double>(r.n_answered);
    }
    if (any_asr) {
        if (ref_words > 0) {
            r.wer = static_cast<double>(word_edits) / static_cast<double>(ref_words);
        }
        if (ref_chars > 0) {
            r.cer = static_cast<double>(char_edits) / static_cast<double>(ref_chars);
        }
    }
    return r;
}

nlohmann::ordered_json report_to_json(const eval_report & r) {
    nlohmann::ordered_json j;
    j["n_items"]          = r.n_items;
    j["accuracy"]         = r.accuracy;
    j["consistency_rate"] = r.consistency_rate;
    j["map"]              = r.map ? nlohmann::ordered_json(*r.map) : nlohmann::ordered_json(nullptr);
    j["wer"]              = r.wer ? nlohmann::ordered_json(*r.wer) : nlohmann::ordered_json(nullptr);
    j["cer"]              = r.cer ? nlohmann::ordered_json(*r.cer) : nlohmann::ordered_json(nullptr);
    return j;
}

std::string report_table(const eval_report & r) {
    auto fmt = [](const std::optional<double> & v) {
        if (!v) {
            return std::string("-");
        }
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", *v);
        return std::string(buf);
    };
    std::string out;
    auto row = [&](const char * name, const std::string & value) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%-18s %12s\n", name, value.c_str());
        out += buf;
    };
    row("metric", "value");
    row("n_items", std::to_string(r.n_items));
    row("accuracy", fmt(r.accuracy));
    row("consistency_rate", fmt(r.consistency_rate));
    row("map", fmt(r.map));
    row("wer", fmt(r.wer));
    row("cer", fmt(r.cer));
    return out;
}

} // namespace auralrl
