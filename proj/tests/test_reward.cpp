#include "auralrl/error.h"
#include "auralrl/reward.h"
#include "fixtures.h"
#include "fuzz.h"

#include <doctest.h>

#include <cstring>
#include <random>

using namespace auralrl;

static const reward_weights k_w;
static const length_params  k_len;

static bool bit_equal(const reward_breakdown & a, const reward_breakdown & b) {
    return std::memcmp(&a, &b, sizeof(reward_breakdown)) == 0;
}

TEST_CASE("accuracy_reward examples") {
    const auto abcd = choices_from_labels({ "A", "B", "C", "D" });
    CHECK(accuracy_reward(parse_trace("<FINAL_ANSWER>B</FINAL_ANSWER>"), "B", abcd) == 1.0);
    CHECK(accuracy_reward(parse_trace("<RESPONSE>B</RESPONSE>"), "B", abcd) == 1.0);
    CHECK(accuracy_reward(parse_trace("<THINK>B</THINK>"), "B", abcd) == 0.0);
    CHECK(accuracy_reward(parse_trace("<RESPONSE>B</RESPONSE><FINAL_ANSWER>C</FINAL_ANSWER>"), "B", abcd) == 0.0);
}

TEST_CASE("format_reward examples") {
    format_report r;
    r.weak_ok = true;
    CHECK(format_reward(r) == 1.0);
    r.strict_ok = true;
    CHECK(format_reward(r) == 1.0);
    CHECK(format_reward(format_report{}) == 0.0);
}

TEST_CASE("consistency_reward examples") {
    const auto item = fuzz::item(true);

    auto c = consistency_reward(parse_trace("<THINK><REASONING>The background music suggests the date is the 12th, "
                                            "so (B).</REASONING><SUMMARY>(B)</SUMMARY></THINK><RESPONSE>B</RESPONSE>"),
                                item, k_w);
    CHECK(c.r_bgs == 0.0);
    CHECK(c.r_cons == 0.0);

    c = consistency_reward(parse_trace(fixture::strict_trace), item, k_w);
    CHECK(c.r_bgs == 1.0);
    CHECK(c.r_fid == 1.0);
    CHECK(c.r_align == 1.0);
    CHECK(c.r_cons == 1.0);

    // Five substitutions out of ten characters.
    paqa_item half = item;
    half.asr       = { "aaaaaaaaaa" };
    c = consistency_reward(parse_trace("<THINK><SPEAKER>S1: 'aaaaabbbbb'</SPEAKER><SUMMARY>(D)</SUMMARY></THINK>"
                                       "<RESPONSE>(D)</RESPONSE>"),
                           half, k_w);
    CHECK(c.r_fid == doctest::Approx(0.5));
    CHECK(c.r_align == 1.0);
    CHECK(c.r_cons == doctest::Approx(0.75));

    // Environment questions are never gated.
    const auto env = fuzz::item(false);
    c = consistency_reward(parse_trace("<THINK><REASONING>The hum suggests (B).</REASONING></THINK><RESPONSE>B</RESPONSE>"),
                           env, k_w);
    CHECK(c.r_bgs == 1.0);
}

TEST_CASE("length_reward examples") {
    CHECK(length_reward(350, false, k_len) == 1.0);
    CHECK(length_reward(350, true, k_len) == 0.0);
    CHECK(length_reward(900, false, k_len) == doctest::Approx(0.5));
    CHECK(length_reward(50, false, k_len) == doctest::Approx(0.5));
    CHECK(length_reward(100, false, k_len) == 1.0);
    CHECK(length_reward(600, false, k_len) == 1.0);
    CHECK(length_reward(1200, false, k_len) == 0.0);
    CHECK(length_reward(5000, false, k_len) == 0.0);
    CHECK(length_reward(0, false, k_len) == 0.0);
}

TEST_CASE("total_reward examples") {
    const auto item = fuzz::item(true);
    auto       b    = total_reward(parse_trace(fixture::strict_trace), item, k_w, k_len, 350, false);
    CHECK(b.total == 3.0);

    const std::string wrong = "<THINK><CAPTION><BGM>hum</BGM><SPEAKER>S4: 'Set the launch to the 15th.'</SPEAKER>"
                              "<ASR>Set the launch to the 15th.</ASR></CAPTION><SUMMARY>(B)</SUMMARY></THINK>"
                              "<RESPONSE>B</RESPONSE>";
    b = total_reward(parse_trace(wrong), item, k_w, k_len, 350, false);
    CHECK(b.r_acc == 0.0);
    CHECK(b.total == 1.5);

    b = total_reward(parse_trace(""), item, k_w, k_len, 0, false);
    CHECK(b.total == 0.0);
}

TEST_CASE("weights and length params validate") {
    reward_weights w;
    w.lambda_fid = 0.7;
    CHECK_THROWS_AS(w.validate(), error);
    w            = reward_weights{};
    w.w_acc      = -1.0;
    CHECK_THROWS_AS(w.validate(), error);
    CHECK_THROWS_AS((length_params{ 600, 100 }.validate()), error);
    CHECK_THROWS_AS((length_params{ 0, 100 }.validate()), error);
}

TEST_CASE("reward invariants on fuzzed traces") {
    std::mt19937_64 rng(1234);
    const paqa_item items[] = { fuzz::item(true), fuzz::item(false) };
    for (int t = 0; t < 2000; ++t) {
        const auto & item   = items[t % 2];
        const auto   src    = fuzz::trace(rng);
        const auto   doc    = parse_trace(src);
        const long   tokens = static_cast<long>(rng() % 1500);
        const bool   trail  = has_trailing_after_final(doc);
        const auto   b      = total_reward(doc, item, k_w, k_len, tokens, trail);

        CHECK(b.r_cons == b.r_bgs * (k_w.lambda_fid * b.r_fid + k_w.lambda_align * b.r_align));
        CHECK(b.total == k_w.w_acc * b.r_acc + k_w.w_cons * b.r_cons + k_w.w_fmt * b.r_fmt + k_w.w_len * (b.r_acc * b.r_len));
        CHECK(b.total >= 0.0);
        CHECK(b.total <= 3.0);
        if (b.r_bgs == 0.0) {
            CHECK(b.r_cons == 0.0);
        }
        if (b.r_acc == 0.0) {
            CHECK(total_reward(doc, item, k_w, k_len, tokens + 777, !trail).total == b.total);
        }
        CHECK(bit_equal(b, total_reward(parse_trace(src), item, k_w, k_len, tokens, trail)));
    }
}

TEST_CASE("raising any single component never lowers the total") {
    std::mt19937_64                        rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 5000; ++t) {
        reward_breakdown b;
        b.r_acc  = static_cast<double>(rng() % 2);
        b.r_fmt  = static_cast<double>(rng() % 2);
        b.r_cons = u(rng);
        b.r_len  = u(rng);
        const double base = combine_reward(b, k_w);
        for (double reward_breakdown::*field : { &reward_breakdown::r_acc, &reward_breakdown::r_fmt,
                                                &reward_breakdown::r_cons, &reward_breakdown::r_len }) {
            reward_breakdown up = b;
            up.*field           = std::min(1.0, up.*field + u(rng));
            CHECK(combine_reward(up, k_w) >= base);
        }
    }
}
