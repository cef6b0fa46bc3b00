#include "auralrl/toy_env.h"

#include "auralrl/error.h"
#include "auralrl/trace.h"

#include <algorithm>
#include <future>
#include <random>

namespace auralrl {

static uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z          = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z          = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

static const char * const k_letters[]      = { "A", "B", "C", "D" };
static const char * const k_choice_texts[] = { "alpha", "bravo", "charlie", "delta" };
static const char * const k_fillers[]      = { "speech", "voice", "tone", "pitch", "calm", "noise" };

toy_env::toy_env() {
    think_open_     = vocab_.add("<THINK>");
    think_close_    = vocab_.add("</THINK>");
    summary_open_   = vocab_.add("<SUMMARY>");
    summary_close_  = vocab_.add("</SUMMARY>");
    response_open_  = vocab_.add("<RESPONSE>");
    response_close_ = vocab_.add("</RESPONSE>");
    for (const char * l : k_letters) {
        letters_.push_back(vocab_.add("(" + std::string(l) + ")"));
    }
    for (const char * f : k_fillers) {
        fillers_.push_back(vocab_.add(f));
    }

    for (size_t cue = 0; cue < n_cues; ++cue) {
        paqa_item it;
        it.id         = "toy-" + std::to_string(cue);
        it.audio_path = "toy/" + std::to_string(cue) + ".wav";
        it.question   = "Which option does the cue point to?";
        for (size_t k = 0; k < n_cues; ++k) {
            it.choices.push_back({ k_letters[k], k_choice_texts[k] });
        }
        it.gold  = k_letters[cue];
        it.qtype = question_type::environment;
        items_.push_back(std::move(it));
    }
}

toy_env::phase toy_env::advance(phase ph, token_id token) const {
    const bool is_letter = std::find(letters_.begin(), letters_.end(), token) != letters_.end();
    switch (ph) {
        case start:           return token == think_open_ ? think : start;
        case think:
            if (token == summary_open_) {
                return summary_open;
            }
            return token == think_close_ ? after_think : think;
        case summary_open:
            if (is_letter) {
                return summary_letter;
            }
            return token == summary_close_ ? summary_done : summary_open;
        case summary_letter:  return token == summary_close_ ? summary_done : summary_letter;
        case summary_done:    return token == think_close_ ? after_think : summary_done;
        case after_think:     return token == response_open_ ? response_open : after_think;
        case response_open:
            if (is_letter) {
                return response_letter;
            }
            return token == response_close_ ? response_done : response_open;
        case response_letter: return token == response_close_ ? response_done : response_letter;
        default:              return finished;
    }
}

toy_env::phase toy_env::replay(const std::vector<token_id> & visible) const {
    phase ph = start;
    for (token_id t : visible) {
        ph = advance(ph, t);
    }
    return ph;
}

std::vector<token_id> toy_env::demonstration(size_t letter, size_t filler_words, uint64_t seed) const {
    std::mt19937_64       rng(seed);
    std::vector<token_id> out{ think_open_ };
    for (size_t k = 0; k < filler_words; ++k) {
        out.push_back(fillers_[rng() % fillers_.size()]);
    }
    const token_id l = letters_.at(letter);
    out.insert(out.end(), { summary_open_, l, summary_close_, think_close_, response_open_, l, response_close_ });
    return out;
}

std::vector<policy_step> toy_env::steps_for(const trajectory_record & rec, size_t cue) const {
    std::vector<policy_step> out;
    phase                    ph = start;
    for (token_id t : rec.visible_tokens) {
        out.push_back({ bucket(ph, cue), t });
        ph = advance(ph, t);
    }
    if (rec.status == decode_status::completed) {
        out.push_back({ bucket(ph, cue), vocab_.eos_id() });
    }
    return out;
}

toy_policy_model::toy_policy_model(const toy_env & env, const toy_policy & policy, size_t cue)
    : env_(env), policy_(policy), cue_(cue) {
    if (policy.buckets() != env.buckets() || policy.vocab_size() != env.vocab().size()) {
        throw error(errc::shape_mismatch, "policy table does not match the toy environment");
    }
    if (cue >= toy_env::n_cues) {
        throw error(errc::invalid_argument, "cue out of range");
    }
}

std::vector<double> toy_policy_model::next_step(decode_state & s) {
    ++s.steps;
    return policy_.probs(env_.bucket(env_.replay(s.visible), cue_));
}

void toy_policy_model::latent_step(decode_state & s) {
    ++s.latent_steps;
}

decode_config toy_train_config::default_decode() {
    decode_config d;
    d.max_tokens = 40;
    return d;
}

void toy_train_config::validate() const {
    if (steps == 0) {
        throw error(errc::invalid_config, "trainer steps must be positive");
    }
    if (group_size < 2) {
        throw error(errc::invalid_config, "trainer group_size must be at least 2");
    }
    if (!(lr >= 0.0) || !(sft_lr >= 0.0) || !(kl_beta >= 0.0)) {
        throw error(errc::invalid_config, "learning rates and kl_beta must be non-negative");
    }
    if (jobs == 0) {
        throw error(errc::invalid_config, "jobs must be at least 1");
    }
    decode.validate();
    weights.validate();
    length.validate();
}

nlohmann::ordered_json step_log_to_json(const toy_step_log & s) {
    nlohmann::ordered_json j;
    j["step"]        = s.step;
    j["mean_reward"] = s.mean_reward;
    j["acc_rate"]    = s.acc_rate;
    j["fmt_rate"]    = s.fmt_rate;
    j["pauses"]      = s.pauses;
    j["aborts"]      = s.aborts;
    j["kl"]          = s.kl;
    return j;
}

toy_policy sft_stage(const toy_env & env, const toy_train_config & config) {
    toy_policy policy(env.buckets(), env.vocab().size(), 1.0);
    if (config.sft_steps == 0 || config.sft_examples == 0) {
        return policy;
    }
    // Every (cue, letter) pair appears equally often: the stage teaches the
    // format and leaves answer accuracy at chance.
    std::mt19937_64          rng(mix_seed(config.seed, 0x5f7));
    std::vector<policy_step> targets;
    for (size_t k = 0; k < config.sft_examples; ++k) {
        const size_t cue    = k % toy_env::n_cues;
        const size_t letter = (k / toy_env::n_cues) % toy_env::n_cues;
        const size_t filler = 1 + rng() % 3;
        trajectory_record rec;
        rec.visible_tokens = env.demonstration(letter, filler, rng());
        rec.status         = decode_status::completed;
        const auto steps   = env.steps_for(rec, cue);
        targets.insert(targets.end(), steps.begin(), steps.end());
    }
    for (size_t s = 0; s < config.sft_steps; ++s) {
        const objective_eval eval  = sft_objective(policy, targets);
        auto &               theta = policy.params();
        for (size_t k = 0; k < theta.size(); ++k) {
            theta[k] -= config.sft_lr * eval.grad[k];
        }
    }
    return policy;
}

static scored_trajectory rollout(const toy_env & env, const toy_policy & policy, size_t cue,
                                 const toy_train_config & config, uint64_t seed) {
    toy_policy_model  model(env, policy, cue);
    scored_trajectory out;
    out.record = run_decode(model, decode_state{}, config.decode, seed);
    const trace_document doc = parse_trace(env.vocab().render(out.record.visible_tokens));
    out.reward = total_reward(doc, env.item(cue), config.weights, config.length,
                              static_cast<long>(out.record.visible_tokens.size()), has_trailing_after_final(doc));
    out.steps = env.steps_for(out.record, cue);
    return out;
}

rollout_group sample_group(const toy_env & env, const toy_policy & policy, size_t cue, const toy_train_config & config,
                           uint64_t seed) {
    rollout_group group;
    group.group   = task_group::paqa;
    group.item_id = env.item(cue).id;
    group.trajectories.resize(config.group_size);

    const size_t jobs = std::min(config.jobs, config.group_size);
    if (jobs <= 1) {
        for (size_t i = 0; i < config.group_size; ++i) {
            group.trajectories[i] = rollout(env, policy, cue, config, mix_seed(seed, i));
        }
        return group;
    }
    std::vector<std::future<void>> workers;
    for (size_t w = 0; w < jobs; ++w) {
        workers.push_back(std::async(std::launch::async, [&, w] {
            for (size_t i = w; i < config.group_size; i += jobs) {
                group.trajectories[i] = rollout(env, policy, cue, config, mix_seed(seed, i));
            }
        }));
    }
    for (auto & f : workers) {
        f.get();
    }
    return group;
}

toy_train_result train_toy(const toy_train_config & config) {
    config.validate();
    const toy_env env;

    toy_train_result result;
    result.sft_policy       = sft_stage(env, config);
    result.policy           = result.sft_policy;
    const toy_policy & ref  = result.sft_policy;

    std::mt19937_64 rng(mix_seed(config.seed, 0x9a0));
    for (size_t step = 0; step < config.steps; ++step) {
        const size_t   cue        = rng() % toy_env::n_cues;
        const uint64_t group_seed = rng();

        const rollout_group group = sample_group(env, result.policy, cue, config, group_seed);
        const auto          adv   = compute_advantages(group, config.decode.tau_abort);
        const update_report rep   = grpo_update(result.policy, ref, group, adv, config.kl_beta, config.lr);

        toy_step_log entry{ step, 0.0, 0.0, 0.0, 0, 0, rep.kl };
        for (const auto & t : group.trajectories) {
            entry.mean_reward += t.reward.total;
            entry.acc_rate += t.reward.r_acc;
            entry.fmt_rate += t.reward.r_fmt;
            entry.pauses += t.record.pause_events.size();
            entry.aborts += t.record.status == decode_status::aborted ? 1 : 0;
        }
        const double m = static_cast<double>(group.size());
        entry.mean_reward /= m;
        entry.acc_rate /= m;
        entry.fmt_rate /= m;
        result.log.push_back(entry);
    }
    return result;
}

} // namespace auralrl
