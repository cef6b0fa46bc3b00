#include "auralrl/trace.h"
#include "fixtures.h"

#include <doctest.h>

#include <random>

using namespace auralrl;

static const std::vector<choice> k_abcd = choices_from_labels({ "A", "B", "C", "D" });

TEST_CASE("parse_trace examples") {
    const auto empty = parse_trace("");
    CHECK(empty.segments.empty());
    CHECK(empty.trailing_text.empty());
    CHECK(empty.malformed.empty());

    const auto doc = parse_trace("<THINK><SUMMARY>x</SUMMARY></THINK><RESPONSE>B</RESPONSE>");
    REQUIRE(doc.segments.size() == 2);
    CHECK(doc.segments[0].kind == tag_kind::think);
    REQUIRE(doc.segments[0].children.size() == 1);
    CHECK(doc.segments[0].children[0].kind == tag_kind::summary);
    CHECK(doc.segments[0].children[0].text == "x");
    CHECK(doc.segments[1].kind == tag_kind::response);
    CHECK(doc.segments[1].text == "B");
    CHECK(doc.malformed.empty());

    const auto bad = parse_trace("<THINK>a</RESPONSE>");
    CHECK(bad.segments.empty());
    CHECK(bad.malformed.size() == 1);
}

TEST_CASE("parse_trace handles unknown, unclosed and stray tags") {
    auto doc = parse_trace("<THINK>x<FOO>y</FOO></THINK>");
    REQUIRE(doc.segments.size() == 1);
    CHECK(doc.segments[0].text == "x<FOO>y</FOO>");
    CHECK(doc.malformed.size() == 2);

    doc = parse_trace("</SUMMARY>tail");
    CHECK(doc.segments.empty());
    CHECK(doc.malformed.size() == 1);
    CHECK(doc.trailing_text == "</SUMMARY>tail");

    doc = parse_trace("<THINK><SUMMARY>open</THINK>");
    REQUIRE(doc.segments.size() == 1);
    CHECK(doc.malformed.size() == 1);

    doc = parse_trace("<RESPONSE>never closed");
    CHECK(doc.segments.empty());
    CHECK(doc.malformed.size() == 1);
}

TEST_CASE("PAUSE and REFLECT variants") {
    const auto doc = parse_trace("<REFLECT2>a<PAUSE>b</REFLECT2><REFLECT>c</REFLECT>");
    REQUIRE(doc.segments.size() == 2);
    CHECK(doc.segments[0].kind == tag_kind::reflect);
    CHECK(doc.segments[0].reflect_index == 2);
    CHECK(doc.segments[0].name == "REFLECT2");
    REQUIRE(doc.segments[0].children.size() == 1);
    CHECK(doc.segments[0].children[0].kind == tag_kind::pause);
    CHECK(doc.segments[1].reflect_index == 0);
    CHECK(doc.render() == "<REFLECT2>a<PAUSE>b</REFLECT2><REFLECT>c</REFLECT>");

    const auto closed_pause = parse_trace("x<PAUSE>y</PAUSE>");
    CHECK(closed_pause.malformed.size() == 1);
}

TEST_CASE("render is lossless on the fixtures") {
    for (const auto & s : { fixture::bad_case_a_summary, fixture::bad_case_d, fixture::bad_case_d_reflection,
                            fixture::strict_trace, std::string("<THINK>a</RESPONSE>"), std::string("x</THINK>y") }) {
        CHECK(parse_trace(s).render() == s);
    }
}

static std::string fuzz_trace(std::mt19937_64 & rng) {
    static const std::vector<std::string> pieces = {
        "<THINK>", "</THINK>", "<RESPONSE>", "</RESPONSE>", "<FINAL_ANSWER>", "</FINAL_ANSWER>", "<SUMMARY>",
        "</SUMMARY>", "<CAPTION>", "</CAPTION>", "<ASR>", "</ASR>", "<SPEAKER>", "</SPEAKER>", "<BGM>", "</BGM>",
        "<PAUSE>", "</PAUSE>", "<REFLECT3>", "</REFLECT3>", "<FOO>", "<", ">", "</", "(B)", "A", " text ", "\n",
        "S1: 'hi there'", "\xe2\x80\x9c", "<REASONING>", "</REASONING>", "<ENV>", "</ENV>",
    };
    std::string s;
    for (size_t k = rng() % 24; k > 0; --k) {
        s += pieces[rng() % pieces.size()];
    }
    return s;
}

TEST_CASE("fuzzed traces: round trip, totality and strict implies weak") {
    std::mt19937_64 rng(99);
    size_t          strict_seen = 0;
    for (int t = 0; t < 5000; ++t) {
        const std::string s   = fuzz_trace(rng);
        trace_document    doc;
        REQUIRE_NOTHROW(doc = parse_trace(s));
        CHECK(doc.render() == s);
        const auto rep = check_format(doc);
        if (rep.strict_ok) {
            ++strict_seen;
            CHECK(rep.weak_ok);
        }
        CHECK_NOTHROW(extract_answer(doc, k_abcd));
        CHECK_NOTHROW(extract_conclusion(doc, k_abcd));
        CHECK_NOTHROW(extract_speaker_quotes(doc));
    }
    CHECK(check_format(parse_trace(fixture::strict_trace)).strict_ok);
    (void) strict_seen;
}

TEST_CASE("check_format examples") {
    auto rep = check_format(parse_trace("<THINK>t</THINK><RESPONSE>A</RESPONSE>"));
    CHECK(rep.weak_ok);
    CHECK_FALSE(rep.strict_ok);

    rep = check_format(parse_trace("<RESPONSE>A</RESPONSE>"));
    CHECK_FALSE(rep.weak_ok);
    REQUIRE(rep.missing_tags.size() >= 1);
    CHECK(rep.missing_tags.front() == tag_kind::think);

    rep = check_format(parse_trace(fixture::strict_trace));
    CHECK(rep.weak_ok);
    CHECK(rep.strict_ok);

    rep = check_format(parse_trace("<RESPONSE>A</RESPONSE><THINK>t</THINK>"));
    CHECK_FALSE(rep.weak_ok);
    CHECK(rep.order_violation);

    rep = check_format(parse_trace("<THINK>a</THINK><THINK>b</THINK><RESPONSE>A</RESPONSE>"));
    CHECK_FALSE(rep.weak_ok);

    rep = check_format(parse_trace(fixture::bad_case_d + fixture::bad_case_d_reflection));
    CHECK(rep.weak_ok);
    CHECK(rep.strict_ok);
}

TEST_CASE("extract_answer examples") {
    auto a = extract_answer(parse_trace(fixture::bad_case_d + fixture::bad_case_d_reflection), k_abcd);
    CHECK(a.answer == "B");
    CHECK(a.source == answer_source::final_answer);

    a = extract_answer(parse_trace("<RESPONSE>B</RESPONSE>"), k_abcd);
    CHECK(a.answer == "B");
    CHECK(a.source == answer_source::response);

    a = extract_answer(parse_trace("<THINK>x</THINK>"), k_abcd);
    CHECK(a.source == answer_source::none);

    a = extract_answer(parse_trace("<RESPONSE>A</RESPONSE><FINAL_ANSWER>(c)</FINAL_ANSWER>"), k_abcd);
    CHECK(a.answer == "C");
    CHECK(a.source == answer_source::final_answer);

    const std::vector<choice> dates = { { "A", "5th" }, { "B", "12th" }, { "C", "13th" }, { "D", "15th" } };
    a = extract_answer(parse_trace("<RESPONSE>The launch is on the 15th.</RESPONSE>"), dates);
    CHECK(a.answer == "D");

    a = extract_answer(parse_trace("<RESPONSE>A choice like this is hard; (B) it is.</RESPONSE>"), k_abcd);
    CHECK(a.answer == "B");

    a = extract_answer(parse_trace("<RESPONSE>  free form  </RESPONSE>"), {});
    CHECK(a.answer == "free form");
}

TEST_CASE("extract_speaker_quotes examples") {
    auto q = extract_speaker_quotes(parse_trace("<SPEAKER>A: 'see you Friday' ; B: 'sounds good'</SPEAKER>"));
    REQUIRE(q.size() == 2);
    CHECK(q[0] == speaker_quote{ "A", "see you Friday" });
    CHECK(q[1] == speaker_quote{ "B", "sounds good" });

    CHECK(extract_speaker_quotes(parse_trace("<SPEAKER></SPEAKER>")).empty());

    q = extract_speaker_quotes(parse_trace("<THINK><SPEAKER>" + fixture::bad_case_b_turns + "</SPEAKER></THINK>"));
    REQUIRE(q.size() == 5);
    CHECK(q[2] == speaker_quote{ "S4", "Set the launch to the 15th." });
    CHECK(q[1].quote == "QA won’t finish by the 12th.");

    q = extract_speaker_quotes(parse_trace("<REASONING>Speaker 2: \"I can't go\" then silence</REASONING>"));
    REQUIRE(q.size() == 1);
    CHECK(q[0].speaker == "2");
    CHECK(q[0].quote == "I can't go");
}

TEST_CASE("extract_conclusion examples") {
    const std::vector<choice> furniture = { { "A", "table" }, { "B", "chair" }, { "C", "bed" }, { "D", "bookshelf" } };
    CHECK(extract_conclusion(parse_trace(fixture::bad_case_a_summary), furniture) == std::optional<std::string>("C"));
    CHECK_FALSE(extract_conclusion(parse_trace("<SUMMARY>nothing decisive here</SUMMARY>"), k_abcd).has_value());
    CHECK(extract_conclusion(parse_trace("<REASONING>first\nso (a) is correct\n</REASONING>"), k_abcd) ==
          std::optional<std::string>("A"));
    CHECK(extract_conclusion(parse_trace(fixture::bad_case_d), k_abcd) == std::optional<std::string>("D"));
}

TEST_CASE("has_trailing_after_final") {
    CHECK_FALSE(has_trailing_after_final(parse_trace("<FINAL_ANSWER>A</FINAL_ANSWER>  \n")));
    CHECK(has_trailing_after_final(parse_trace("<FINAL_ANSWER>A</FINAL_ANSWER> more words")));
    CHECK_FALSE(has_trailing_after_final(parse_trace("<RESPONSE>A</RESPONSE> more")));
}
