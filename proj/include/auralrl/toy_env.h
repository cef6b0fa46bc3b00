#pragma once

#include "auralrl/dataset.h"
#include "auralrl/decode.h"
#include "auralrl/grpo.h"
#include "auralrl/reward.h"
#include "auralrl/toy_policy.h"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace auralrl {

// Synthetic 4-choice QA environment. Each prompt carries a cue (0..3) that
// names the correct letter; the policy sees only (phase, cue) buckets.
class toy_env {
  public:
    enum phase : size_t {
        start,
        think,
        summary_open,
        summary_letter,
        summary_done,
        after_think,
        response_open,
        response_letter,
        response_done,
        finished,
        n_phases,
    };

    static constexpr size_t n_cues = 4;

    toy_env();

    const vocabulary & vocab() const noexcept { return vocab_; }
    size_t             buckets() const noexcept { return n_phases * n_cues; }
    size_t             bucket(phase ph, size_t cue) const { return static_cast<size_t>(ph) * n_cues + cue; }

    phase advance(phase ph, token_id token) const;
    phase replay(const std::vector<token_id> & visible) const;

    const paqa_item & item(size_t cue) const { return items_.at(cue); }

    // A well-formed trace whose summary and response both pick `letter`.
    std::vector<token_id> demonstration(size_t letter, size_t filler_words, uint64_t seed) const;

    // (bucket, token) pairs for the visible tokens, plus </s> when completed.
    std::vector<policy_step> steps_for(const trajectory_record & rec, size_t cue) const;

    token_id letter_token(size_t letter) const { return letters_.at(letter); }

  private:
    vocabulary            vocab_;
    token_id              think_open_, think_close_, summary_open_, summary_close_, response_open_, response_close_;
    std::vector<token_id> letters_;
    std::vector<token_id> fillers_;
    std::vector<paqa_item> items_;
};

// decode_model view of a toy_policy inside the environment.
class toy_policy_model : public decode_model {
  public:
    toy_policy_model(const toy_env & env, const toy_policy & policy, size_t cue);

    const vocabulary &  vocab() const override { return env_.vocab(); }
    std::vector<double> next_step(decode_state & s) override;
    void                latent_step(decode_state & s) override;

  private:
    const toy_env &    env_;
    const toy_policy & policy_;
    size_t             cue_;
};

struct toy_train_config {
    size_t         steps      = 2000;
    size_t         group_size = 8;
    double         lr         = 0.3;
    double         kl_beta    = 0.1;
    size_t         sft_steps  = 200;
    double         sft_lr     = 50;
    size_t         sft_examples = 64;
    size_t         jobs       = 1;
    uint64_t       seed       = 0;
    decode_config  decode     = default_decode();
    reward_weights weights;
    length_params  length{ 4, 24 };

    static decode_config default_decode();
    void                 validate() const;
};

struct toy_step_log {
    size_t step;
    double mean_reward;
    double acc_rate;
    double fmt_rate;
    size_t pauses;
    size_t aborts;
    double kl;

    bool operator==(const toy_step_log &) const = default;
};

nlohmann::ordered_json step_log_to_json(const toy_step_log & s);

struct toy_train_result {
    toy_policy                sft_policy;
    toy_policy                policy;
    std::vector<toy_step_log> log;
};

toy_policy       sft_stage(const toy_env & env, const toy_train_config & config);
rollout_group    sample_group(const toy_env & env, const toy_policy & policy, size_t cue, const toy_train_config & config,
                              uint64_t seed);
toy_train_result train_toy(const toy_train_config & config);

} // namespace auralrl
