#include "auralrl/grpo.h"

#include "auralrl/error.h"

#include <algorithm>
#include <cmath>

namespace auralrl {

std::string_view task_group_name(task_group g) {
    return g == task_group::paqa ? "PAQA" : "AVQA";
}

std::vector<double> relative_advantage(const std::vector<double> & rewards) {
    if (rewards.size() < 2) {
        throw error(errc::group_too_small, "relative advantage needs at least two rollouts");
    }
    double sum = 0.0;
    for (double r : rewards) {
        sum += r;
    }
    const double        mean = sum / static_cast<double>(rewards.size());
    std::vector<double> out;
    out.reserve(rewards.size());
    for (double r : rewards) {
        out.push_back(r - mean);
    }
    return out;
}

std::vector<double> lgc_weight(const std::vector<double> & lgc_values, double tau_abort) {
    if (lgc_values.size() < 2) {
        throw error(errc::group_too_small, "lgc weighting needs at least two rollouts");
    }
    const double n    = static_cast<double>(lgc_values.size());
    double       mean = 0.0;
    for (double v : lgc_values) {
        mean += v;
    }
    mean /= n;
    double var = 0.0;
    for (double v : lgc_values) {
        var += (v - mean) * (v - mean);
    }
    // spread at rounding level counts as zero variance
    double sd = std::sqrt(var / n);
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
        sd = 0.0;
    }

    std::vector<double> out;
    out.reserve(lgc_values.size());
    for (double v : lgc_values) {
        const double z = sd > 0.0 ? (v - mean) / sd : 0.0;
        double       w = std::clamp(0.5 + 0.25 * z, 0.0, 1.0);
        if (v < tau_abort) {
            w = 0.0;
        }
        out.push_back(w);
    }
    return out;
}

std::vector<advantage_record> compute_advantages(const rollout_group & group, double tau_abort) {
    std::vector<double> rewards;
    std::vector<double> lgcs;
    for (const auto & t : group.trajectories) {
        rewards.push_back(t.reward.total);
        lgcs.push_back(t.record.lgc);
    }
    const auto rel     = relative_advantage(rewards);
    const auto weights = lgc_weight(lgcs, tau_abort);

    std::vector<advantage_record> out;
    out.reserve(rewards.size());
    for (size_t i = 0; i < rewards.size(); ++i) {
        const double w = group.trajectories[i].record.status == decode_status::aborted ? 0.0 : weights[i];
        out.push_back({ rewards[i], rel[i], w, w * rel[i] });
    }
    return out;
}

static void check_steps(const toy_policy & policy, const std::vector<policy_step> & steps) {
    for (const auto & s : steps) {
        if (s.bucket >= policy.buckets() || s.token < 0 || static_cast<size_t>(s.token) >= policy.vocab_size()) {
            throw error(errc::shape_mismatch, "policy step outside the policy table");
        }
    }
}

objective_eval grpo_objective(const toy_policy & policy, const toy_policy & ref,
                              const std::vector<std::vector<policy_step>> & trajectories,
                              const std::vector<double> & advantages, double kl_beta) {
    if (trajectories.size() != advantages.size()) {
        throw error(errc::shape_mismatch, "one advantage is needed per trajectory");
    }
    if (policy.buckets() != ref.buckets() || policy.vocab_size() != ref.vocab_size() ||
        policy.temperature() != ref.temperature()) {
        throw error(errc::shape_mismatch, "policy and reference tables differ in shape");
    }
    const size_t V    = policy.vocab_size();
    const double invT = 1.0 / policy.temperature();
    const double m    = static_cast<double>(trajectories.size());

    objective_eval out;
    out.grad.assign(policy.params().size(), 0.0);

    // Cache per-bucket distributions.
    std::vector<std::vector<double>> lp(policy.buckets());
    std::vector<std::vector<double>> lq(policy.buckets());
    auto ensure = [&](size_t b) {
        if (lp[b].empty()) {
            lp[b] = policy.log_probs(b);
            lq[b] = ref.log_probs(b);
        }
    };

    size_t n_steps = 0;
    for (size_t i = 0; i < trajectories.size(); ++i) {
        check_steps(policy, trajectories[i]);
        n_steps += trajectories[i].size();
        const double a = advantages[i];
        for (const auto & s : trajectories[i]) {
            ensure(s.bucket);
            const size_t tok = static_cast<size_t>(s.token);
            out.pg -= a * lp[s.bucket][tok] / m;
            if (a == 0.0) {
                continue;
            }
            double * g = out.grad.data() + s.bucket * V;
            for (size_t v = 0; v < V; ++v) {
                const double ind = v == tok ? 1.0 : 0.0;
                g[v] -= a * (ind - std::exp(lp[s.bucket][v])) * invT / m;
            }
        }
    }

    if (n_steps > 0 && kl_beta != 0.0) {
        const double scale = kl_beta / static_cast<double>(n_steps);
        for (const auto & traj : trajectories) {
            for (const auto & s : traj) {
                const auto & p_log = lp[s.bucket];
                const auto & q_log = lq[s.bucket];
                double       kl    = 0.0;
                for (size_t v = 0; v < V; ++v) {
                    const double p = std::exp(p_log[v]);
                    if (p > 0.0) {
                        kl += p * (p_log[v] - q_log[v]);
                    }
                }
                out.kl += kl / static_cast<double>(n_steps);
                double * g = out.grad.data() + s.bucket * V;
                for (size_t v = 0; v < V; ++v) {
                    const double p = std::exp(p_log[v]);
                    if (p > 0.0) {
                        g[v] += scale * p * (p_log[v] - q_log[v] - kl) * invT;
                    }
                }
            }
        }
    }
    out.total = out.pg + kl_beta * out.kl;
    return out;
}

update_report grpo_update(toy_policy & policy, const toy_policy & ref, const rollout_group & group,
                          const std::vector<advantage_record> & advantages, double kl_beta, double lr) {
    if (group.trajectories.size() != advantages.size()) {
        throw error(errc::shape_mismatch, "one advantage is needed per trajectory");
    }
    std::vector<std::vector<policy_step>> steps;
    std::vector<double>                   adv;
    steps.reserve(group.trajectories.size());
    for (size_t i = 0; i < group.trajectories.size(); ++i) {
        steps.push_back(group.trajectories[i].steps);
        adv.push_back(advantages[i].advantage);
    }
    const objective_eval eval = grpo_objective(policy, ref, steps, adv, kl_beta);

    update_report report{ eval.pg, eval.kl, eval.total, 0.0 };
    double        sq = 0.0;
    auto &        theta = policy.params();
    for (size_t k = 0; k < theta.size(); ++k) {
        sq += eval.grad[k] * eval.grad[k];
        if (eval.grad[k] != 0.0) {
            theta[k] -= lr * eval.grad[k];
        }
    }
    report.grad_norm = std::sqrt(sq);
    return report;
}

objective_eval sft_objective(const toy_policy & policy, const std::vector<policy_step> & targets) {
    if (targets.empty()) {
        throw error(errc::empty_target, "sft loss needs at least one target token");
    }
    check_steps(policy, targets);
    const size_t V    = policy.vocab_size();
    const double invT = 1.0 / policy.temperature();
    const double n    = static_cast<double>(targets.size());

    objective_eval out;
    out.grad.assign(policy.params().size(), 0.0);
    std::vector<std::vector<double>> lp(policy.buckets());
    for (const auto & s : targets) {
        if (lp[s.bucket].empty()) {
            lp[s.bucket] = policy.log_probs(s.bucket);
        }
        const size_t tok = static_cast<size_t>(s.token);
        out.pg -= lp[s.bucket][tok] / n;
        double * g = out.grad.data() + s.bucket * V;
        for (size_t v = 0; v < V; ++v) {
            const double ind = v == tok ? 1.0 : 0.0;
            g[v] -= (ind - std::exp(lp[s.bucket][v])) * invT / n;
        }
    }
    out.total = out.pg;
    return out;
}

double sft_loss(const toy_policy & policy, const std::vector<policy_step> & targets) {
    return sft_objective(policy, targets).total;
}

} // namespace auralrl
