#include "auralrl/error.h"
#include "auralrl/grpo.h"
#include "auralrl/toy_policy.h"
#include "oracles.h"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace auralrl;

template <typename F> static errc code_of(F && f) {
    try {
        f();
    } catch (const error & e) {
        return e.code();
    }
    FAIL("expected an auralrl::error");
    return errc::invalid_argument;
}

static toy_policy random_policy(std::mt19937_64 & rng, size_t buckets = 3, size_t vocab = 8) {
    toy_policy                       p(buckets, vocab);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto & v : p.params()) {
        v = n(rng);
    }
    return p;
}

static std::vector<std::vector<policy_step>> random_trajectories(std::mt19937_64 & rng, size_t m, size_t buckets,
                                                                 size_t vocab) {
    std::vector<std::vector<policy_step>> out(m);
    for (auto & t : out) {
        for (size_t k = 0, n = 1 + rng() % 6; k < n; ++k) {
            t.push_back({ static_cast<size_t>(rng() % buckets), static_cast<token_id>(rng() % vocab) });
        }
    }
    return out;
}

TEST_CASE("relative_advantage examples") {
    const auto a = relative_advantage({ 1, 1, 0, 0, 0, 0, 0, 0 });
    const std::vector<double> expect = { 0.75, 0.75, -0.25, -0.25, -0.25, -0.25, -0.25, -0.25 };
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == doctest::Approx(expect[i]));
    }
    CHECK(relative_advantage({ 3, 3, 3 }) == std::vector<double>{ 0, 0, 0 });
    CHECK(relative_advantage({ 2, 0 }) == std::vector<double>{ 1, -1 });
    CHECK(code_of([] { relative_advantage({ 1 }); }) == errc::group_too_small);
}

TEST_CASE("relative advantages sum to zero") {
    std::mt19937_64                        rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> r(2 + rng() % 15);
        for (auto & v : r) {
            v = u(rng);
        }
        const auto a = relative_advantage(r);
        CHECK(std::abs(std::accumulate(a.begin(), a.end(), 0.0)) < 1e-9);
    }
}

TEST_CASE("lgc_weight examples") {
    for (double w : lgc_weight({ 0.4, 0.4, 0.4 }, 0.05)) {
        CHECK(w == 0.5);
    }
    const auto w = lgc_weight({ 0.01, 0.4, 0.6 }, 0.05);
    CHECK(w[0] == 0.0);
    const auto pair = lgc_weight({ 0.2, 0.8 }, 0.05);
    CHECK(pair[0] == doctest::Approx(0.25));
    CHECK(pair[1] == doctest::Approx(0.75));
    CHECK(code_of([] { lgc_weight({ 0.5 }, 0.05); }) == errc::group_too_small);
}

TEST_CASE("lgc weights stay in the unit interval") {
    std::mt19937_64                        rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> l(2 + rng() % 10);
        for (auto & v : l) {
            v = u(rng);
        }
        const auto w = lgc_weight(l, 0.2);
        for (size_t i = 0; i < l.size(); ++i) {
            CHECK(w[i] >= 0.0);
            CHECK(w[i] <= 1.0);
            if (l[i] < 0.2) {
                CHECK(w[i] == 0.0);
            }
        }
    }
}

TEST_CASE("compute_advantages multiplies weight by relative reward") {
    rollout_group g;
    const std::vector<double> rewards = { 3.0, 1.5, 0.0, 2.0 };
    const std::vector<double> lgcs    = { 0.6, 0.3, 0.01, 0.45 };
    for (size_t i = 0; i < rewards.size(); ++i) {
        scored_trajectory s;
        s.reward.total = rewards[i];
        s.record.lgc   = lgcs[i];
        s.record.status = decode_status::completed;
        g.trajectories.push_back(s);
    }
    g.trajectories[3].record.status = decode_status::aborted;
    const auto adv = compute_advantages(g, 0.05);
    const auto rel = relative_advantage(rewards);
    const auto w   = lgc_weight(lgcs, 0.05);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(adv[i].raw == rewards[i]);
        CHECK(adv[i].relative == rel[i]);
        CHECK(adv[i].weight == w[i]);
        CHECK(adv[i].advantage == w[i] * rel[i]);
    }
    CHECK(adv[2].weight == 0.0);
    CHECK(adv[3].weight == 0.0);
    CHECK(adv[3].advantage == 0.0);
}

TEST_CASE("grpo gradient matches central finite differences") {
    std::mt19937_64                        rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (double temp : { 1.0, 0.7 }) {
        for (int t = 0; t < 10; ++t) {
            toy_policy p   = random_policy(rng);
            toy_policy ref = random_policy(rng);
            toy_policy pt(3, 8, temp), rt(3, 8, temp);
            pt.params()     = p.params();
            rt.params()     = ref.params();
            const auto traj = random_trajectories(rng, 4, 3, 8);
            std::vector<double> adv(4);
            for (auto & a : adv) {
                a = u(rng);
            }
            const auto ev  = grpo_objective(pt, rt, traj, adv, 0.1);
            const auto num = oracle::numeric_grad(
                pt, [&](const toy_policy & q) { return grpo_objective(q, rt, traj, adv, 0.1).total; });
            CHECK(oracle::max_rel_error(ev.grad, num) < 1e-4);
            CHECK(ev.total == doctest::Approx(ev.pg + 0.1 * ev.kl));
            CHECK(ev.kl >= 0.0);
        }
    }
}

TEST_CASE("sft gradient matches central finite differences") {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 10; ++t) {
        toy_policy p       = random_policy(rng);
        const auto targets = random_trajectories(rng, 1, 3, 8)[0];
        const auto ev      = sft_objective(p, targets);
        const auto num     = oracle::numeric_grad(p, [&](const toy_policy & q) { return sft_loss(q, targets); });
        CHECK(oracle::max_rel_error(ev.grad, num) < 1e-4);
        CHECK(ev.total == doctest::Approx(sft_loss(p, targets)));
    }
}

TEST_CASE("sft_loss closed forms") {
    toy_policy uniform(3, 8);
    CHECK(sft_loss(uniform, { { 0, 1 }, { 2, 7 } }) == doctest::Approx(std::log(8.0)).epsilon(1e-12));
    toy_policy peaked(3, 8);
    peaked.logit(0, 1) = 1000;
    peaked.logit(2, 7) = 1000;
    CHECK(sft_loss(peaked, { { 0, 1 }, { 2, 7 } }) == 0.0);
    CHECK(code_of([&] { sft_loss(uniform, {}); }) == errc::empty_target);
}

static rollout_group group_of(const std::vector<std::vector<policy_step>> & traj) {
    rollout_group g;
    for (const auto & t : traj) {
        scored_trajectory s;
        s.steps = t;
        g.trajectories.push_back(s);
    }
    return g;
}

static std::vector<advantage_record> adv_of(const std::vector<double> & a) {
    std::vector<advantage_record> out;
    for (double v : a) {
        out.push_back({ 0, 0, 1, v });
    }
    return out;
}

TEST_CASE("zero advantages at the reference are a no-op") {
    std::mt19937_64  rng(17);
    toy_policy       p      = random_policy(rng);
    const toy_policy ref    = p;
    const auto       g      = group_of(random_trajectories(rng, 8, 3, 8));
    const auto       report = grpo_update(p, ref, g, adv_of(std::vector<double>(8, 0.0)), 0.1, 0.5);
    CHECK(p == ref);
    CHECK(report.grad_norm == 0.0);
    CHECK(report.kl == 0.0);
}

TEST_CASE("a positive advantage raises its tokens' probabilities") {
    std::mt19937_64  rng(19);
    for (int t = 0; t < 20; ++t) {
        toy_policy       p   = random_policy(rng);
        const toy_policy ref = p;
        std::vector<policy_step> traj;
        for (size_t b = 0; b < 3; ++b) {
            traj.push_back({ b, static_cast<token_id>(rng() % 8) });
        }
        const auto g = group_of({ traj, {} });
        grpo_update(p, ref, g, adv_of({ 1.0, 0.0 }), 0.1, 0.01);
        for (const auto & s : traj) {
            CHECK(p.probs(s.bucket)[s.token] > ref.probs(s.bucket)[s.token]);
        }
    }
}

TEST_CASE("objective shape errors") {
    toy_policy p(3, 8), q(3, 8), other(2, 8);
    CHECK(code_of([&] { grpo_objective(p, q, { { { 0, 1 } } }, { 1.0, 2.0 }, 0.1); }) == errc::shape_mismatch);
    CHECK(code_of([&] { grpo_objective(p, other, { { { 0, 1 } } }, { 1.0 }, 0.1); }) == errc::shape_mismatch);
    CHECK(code_of([&] { grpo_objective(p, q, { { { 5, 1 } } }, { 1.0 }, 0.1); }) == errc::shape_mismatch);
    CHECK(code_of([&] { grpo_update(p, q, group_of({ {} }), adv_of({ 1.0, 1.0 }), 0.1, 0.1); }) ==
          errc::shape_mismatch);
}

TEST_CASE("policy checkpoint round trip") {
    std::mt19937_64 rng(23);
    toy_policy      p = random_policy(rng, 4, 5);
    const auto      j = p.to_json();
    CHECK(toy_policy::from_json(nlohmann::ordered_json::parse(j.dump())) == p);
    auto bad = j;
    bad["logits"].erase(0);
    CHECK_THROWS_AS(toy_policy::from_json(bad), error);
}
