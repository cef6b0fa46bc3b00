#include "auralrl/error.h"
#include "auralrl/eval.h"
#include "fixtures.h"
#include "fuzz.h"
#include "oracles.h"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace auralrl;

static std::string answered(const std::string & summary, const std::string & response) {
    return "<THINK><SUMMARY>(" + summary + ")</SUMMARY></THINK><RESPONSE>(" + response + ")</RESPONSE>";
}

TEST_CASE("mc_accuracy examples") {
    CHECK(mc_accuracy({ "A", "B", "C" }, { "A", "B", "C" }) == 1.0);
    CHECK(mc_accuracy({ "A", "B" }, { "A", "C" }) == 0.5);
    CHECK_THROWS_AS(mc_accuracy({}, {}), error);
    CHECK_THROWS_AS(mc_accuracy({ "A" }, { "A", "B" }), error);
}

TEST_CASE("average precision examples") {
    CHECK(std::abs(average_precision({ 0.9, 0.8, 0.1 }, { true, false, true }) - (1.0 + 2.0 / 3.0) / 2.0) < 1e-12);
    CHECK(average_precision({ 0.9, 0.8, 0.1, 0.05 }, { true, true, false, false }) == 1.0);
    CHECK(map_multilabel({ { 0.9 }, { 0.8 }, { 0.1 } }, { { true }, { false }, { true } }) ==
          doctest::Approx(0.8333333333).epsilon(1e-9));
    try {
        map_multilabel({ { 0.9, 0.1 }, { 0.2, 0.3 } }, { { false, false }, { false, false } });
        FAIL("expected no_positives");
    } catch (const error & e) {
        CHECK(e.code() == errc::no_positives);
    }
}

TEST_CASE("ties keep original order") {
    CHECK(average_precision({ 0.5, 0.5 }, { true, false }) == 1.0);
    CHECK(average_precision({ 0.5, 0.5 }, { false, true }) == 0.5);
}

TEST_CASE("AP agrees with the oracle and ignores monotone rescaling") {
    std::mt19937_64                        rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 300; ++t) {
        const size_t        n = 2 + rng() % 30;
        std::vector<double> s(n);
        std::vector<bool>   l(n);
        for (size_t i = 0; i < n; ++i) {
            s[i] = std::round(u(rng) * 20) / 20;
            l[i] = rng() % 3 == 0;
        }
        l[rng() % n] = true;
        const double ap = average_precision(s, l);
        CHECK(std::abs(ap - oracle::average_precision(s, l)) < 1e-12);
        std::vector<double> warped(n);
        for (size_t i = 0; i < n; ++i) {
            warped[i] = std::exp(3.0 * s[i]) - 7.0;
        }
        CHECK(average_precision(warped, l) == ap);
    }
}

TEST_CASE("map skips classes without positives") {
    const std::vector<std::vector<double>> s = { { 0.9, 0.2, 0.4 }, { 0.1, 0.8, 0.3 } };
    const std::vector<std::vector<bool>>   l = { { true, false, false }, { false, true, false } };
    CHECK(map_multilabel(s, l) == 1.0);
}

TEST_CASE("evaluate on a perfect set") {
    const auto                  item = fuzz::item(true);
    std::vector<paqa_item>      items(4, item);
    std::vector<trace_document> traces(4, parse_trace(fixture::strict_trace));
    const auto                  r = evaluate(items, traces);
    CHECK(r.accuracy == 1.0);
    CHECK(r.consistency_rate == 1.0);
    CHECK(r.n_items == 4);
    REQUIRE(r.wer.has_value());
}

TEST_CASE("verbatim ASR echo has zero error rates") {
    const auto  item = fuzz::item(true);
    std::string asr;
    for (const auto & s : item.asr) {
        asr += s + " ";
    }
    const auto r = evaluate({ item }, { parse_trace("<THINK><CAPTION><ASR>" + asr + "</ASR></CAPTION></THINK>" +
                                                   "<RESPONSE>(D)</RESPONSE>") });
    REQUIRE(r.wer.has_value());
    REQUIRE(r.cer.has_value());
    CHECK(*r.wer == 0.0);
    CHECK(*r.cer == 0.0);
}

TEST_CASE("mixed set of ten with seven correct") {
    const auto                  item = fuzz::item(false);
    std::vector<paqa_item>      items(10, item);
    std::vector<trace_document> traces;
    for (int i = 0; i < 7; ++i) {
        traces.push_back(parse_trace(answered("D", "D")));
    }
    traces.push_back(parse_trace(answered("D", "B")));
    traces.push_back(parse_trace(answered("A", "A")));
    traces.push_back(parse_trace("<THINK>no idea"));
    const auto r = evaluate(items, traces);
    CHECK(r.accuracy == doctest::Approx(0.7));
    CHECK(r.n_correct == 7);
    CHECK(r.n_answered == 9);
    CHECK(r.consistency_rate == doctest::Approx(8.0 / 9.0));
    CHECK_FALSE(r.wer.has_value());
    CHECK_THROWS_AS(evaluate(items, {}), error);
}

TEST_CASE("evaluate tolerates malformed traces") {
    std::mt19937_64             rng(3);
    const auto                  item = fuzz::item(true);
    std::vector<paqa_item>      items;
    std::vector<trace_document> traces;
    for (int i = 0; i < 300; ++i) {
        items.push_back(item);
        traces.push_back(parse_trace(fuzz::trace(rng)));
    }
    const auto r = evaluate(items, traces);
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 1.0);
    CHECK(std::abs(r.accuracy * r.n_items - std::round(r.accuracy * r.n_items)) < 1e-9);
}

TEST_CASE("report renders as json and table") {
    eval_report r;
    r.n_items  = 2;
    r.accuracy = 0.5;
    r.wer      = 0.25;
    const auto j = report_to_json(r);
    CHECK(j.at("accuracy") == 0.5);
    CHECK(j.at("map").is_null());
    const auto t = report_table(r);
    CHECK(t.find("0.2500") != std::string::npos);
    CHECK(t.find("accuracy") != std::string::npos);
}
