#pragma once

#include "auralrl/dataset.h"
#include "auralrl/trace.h"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace auralrl {

double mc_accuracy(const std::vector<std::string> & predictions, const std::vector<std::string> & golds);

// Average precision for one class; ties keep the original item order.
double average_precision(const std::vector<double> & scores, const std::vector<bool> & labels);

// scores[item][class], labels[item][class]. Classes without positives are skipped.
double map_multilabel(const std::vector<std::vector<double>> & scores, const std::vector<std::vector<bool>> & labels);

struct eval_report {
    double                accuracy         = 0.0;
    double                consistency_rate = 0.0;
    std::optional<double> map;
    std::optional<double> wer;
    std::optional<double> cer;
    size_t                n_items    = 0;
    size_t                n_correct  = 0;
    size_t                n_answered = 0;
};

eval_report evaluate(const std::vector<paqa_item> & items, const std::vector<trace_document> & traces);

nlohmann::ordered_json report_to_json(const eval_report & r);
std::string            report_table(const eval_report & r);

} // namespace auralrl
