#pragma once

#include "auralrl/dataset.h"
#include "auralrl/trace.h"

#include <json.hpp>

namespace auralrl {

struct reward_weights {
    double w_acc        = 1.0;
    double w_cons       = 1.0;
    double w_fmt        = 0.5;
    double w_len        = 0.5;
    double lambda_fid   = 0.5;
    double lambda_align = 0.5;

    void validate() const;
};

struct length_params {
    int t_min = 100;
    int t_max = 600;

    void validate() const;
};

struct reward_breakdown {
    double r_acc   = 0.0;
    double r_fmt   = 0.0;
    double r_bgs   = 0.0;
    double r_fid   = 0.0;
    double r_align = 0.0;
    double r_cons  = 0.0;
    double r_len   = 0.0;
    double total   = 0.0;

    bool operator==(const reward_breakdown &) const = default;
};

struct consistency_terms {
    double r_bgs   = 1.0;
    double r_fid   = 0.0;
    double r_align = 0.0;
    double r_cons  = 0.0;
};

double accuracy_reward(const trace_document & doc, const std::string & gold, const std::vector<choice> & choices);

// Weak format earns the whole format term; strict format is rewarded only
// through consistency.
double format_reward(const format_report & report);

consistency_terms consistency_reward(const trace_document & doc, const paqa_item & item, const reward_weights & weights);

double length_reward(long visible_token_count, bool trailing_after_final, const length_params & params);

// Weighted sum; the length term is gated by accuracy.
double combine_reward(const reward_breakdown & parts, const reward_weights & weights);

reward_breakdown total_reward(const trace_document & doc, const paqa_item & item, const reward_weights & weights,
                              const length_params & length, long token_count, bool trailing);

nlohmann::ordered_json breakdown_to_json(const reward_breakdown & b);

} // namespace auralrl
