#pragma once

#include "auralrl/decode.h"
#include "auralrl/reward.h"
#include "auralrl/toy_policy.h"

#include <string>
#include <string_view>
#include <vector>

namespace auralrl {

enum class task_group { paqa, avqa };

std::string_view task_group_name(task_group g);

// One scored action: the token chosen in a given context bucket.
struct policy_step {
    size_t   bucket;
    token_id token;
};

struct scored_trajectory {
    trajectory_record        record;
    reward_breakdown         reward;
    std::vector<policy_step> steps;
};

struct rollout_group {
    task_group                     group = task_group::paqa;
    std::string                    item_id;
    std::vector<scored_trajectory> trajectories;

    size_t size() const noexcept { return trajectories.size(); }
};

struct advantage_record {
    double raw;
    double relative;
    double weight;
    double advantage;
};

std::vector<double> relative_advantage(const std::vector<double> & rewards);

// Group z-score of lgc mapped to clip(0.5 + 0.25 z, 0, 1); zero below tau_abort.
std::vector<double> lgc_weight(const std::vector<double> & lgc_values, double tau_abort);

// Aborted trajectories are weighted zero as well.
std::vector<advantage_record> compute_advantages(const rollout_group & group, double tau_abort);

struct objective_eval {
    double              pg    = 0.0;
    double              kl    = 0.0;
    double              total = 0.0;
    std::vector<double> grad; // d total / d logits, same layout as toy_policy::params()
};

// L = -(1/m) sum_i A_i sum_t log pi(a_t | b_t) + beta * mean_t KL(pi(.|b_t) || ref(.|b_t))
objective_eval grpo_objective(const toy_policy & policy, const toy_policy & ref,
                              const std::vector<std::vector<policy_step>> & trajectories,
                              const std::vector<double> & advantages, double kl_beta);

struct update_report {
    double pg        = 0.0;
    double kl        = 0.0;
    double total     = 0.0;
    double grad_norm = 0.0;
};

update_report grpo_update(toy_policy & policy, const toy_policy & ref, const rollout_group & group,
                          const std::vector<advantage_record> & advantages, double kl_beta, double lr);

// Mean negative log-likelihood of targets given their buckets.
objective_eval sft_objective(const toy_policy & policy, const std::vector<policy_step> & targets);
double         sft_loss(const toy_policy & policy, const std::vector<policy_step> & targets);

} // namespace auralrl
