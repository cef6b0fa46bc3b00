#pragma once

// Structured random traces: mostly well-formed tag skeletons with quotes,
// option references, noise-causal sentences and occasional corruption.

#include "auralrl/dataset.h"

#include <random>
#include <string>

namespace fuzz {

inline auralrl::paqa_item item(bool speech_question) {
    auralrl::paqa_item it;
    it.id       = speech_question ? "fz-speech" : "fz-env";
    it.audio_path = "audio/fz.wav";
    it.question = "What is the final launch date?";
    it.choices  = { { "A", "5th" }, { "B", "12th" }, { "C", "13th" }, { "D", "15th" } };
    it.gold     = "D";
    it.qtype    = speech_question ? auralrl::question_type::speech : auralrl::question_type::environment;
    it.env_tag  = "steady hvac hum";
    it.turns    = { { "S1", "a.wav", "Ship date is the 12th if QA passes.", 0.0 },
                    { "S4", "b.wav", "Set the launch to the 15th.", 2.0 },
                    { "S2", "c.wav", "Not the 5th, I said the 15th.", 4.0 } };
    for (const auto & t : it.turns) {
        it.asr.push_back(t.transcript);
    }
    it.qpt = auralrl::qpt(it.asr, it.asr);
    return it;
}

inline std::string trace(std::mt19937_64 & rng) {
    auto pick = [&](std::initializer_list<const char *> xs) {
        auto it = xs.begin();
        std::advance(it, rng() % xs.size());
        return std::string(*it);
    };
    auto coin = [&](int percent) { return static_cast<int>(rng() % 100) < percent; };

    std::string s;
    if (coin(85)) {
        s += "<THINK>";
        if (coin(50)) {
            s += "<PLANNING>" + pick({ "find the date", "listen for speakers", "" }) + "</PLANNING>";
        }
        if (coin(60)) {
            s += "<CAPTION>";
            if (coin(70)) {
                s += pick({ "<BGM>steady hvac hum</BGM>", "<ENV>meeting room</ENV>", "" });
            }
            if (coin(70)) {
                s += "<SPEAKER>" +
                     pick({ "S4: 'Set the launch to the 15th.'", "S1: 'Ship date is the 12th' ; S2: 'Not the 5th'",
                            "S2: 'purple llamas everywhere'", "two voices", "[S4] “Set the launch to the 15th.”" }) +
                     "</SPEAKER>";
            }
            if (coin(70)) {
                s += "<ASR>" + pick({ "Set the launch to the 15th.", "ship date is the twelfth", "" }) + "</ASR>";
            }
            s += "</CAPTION>";
        }
        if (coin(70)) {
            s += "<REASONING>" +
                 pick({ "S4 moves the date, so (D) is correct.", "The hvac hum suggests a late meeting, so (B).",
                        "Background music indicates (A).", "Speaker 1: \"ship date is the 12th\" so (b) is correct",
                        "no idea", "The answer is 15th." }) +
                 "</REASONING>";
        }
        if (coin(70)) {
            s += "<SUMMARY>" + pick({ "Final answer (D).", "option B", "the 13th", "unclear", "(A)" }) + "</SUMMARY>";
        }
        if (coin(92)) {
            s += "</THINK>";
        }
    }
    if (coin(80)) {
        s += "<RESPONSE>" + pick({ "(D) 15th", "B", "C.", "the 5th", "I cannot tell", "(d)" }) + "</RESPONSE>";
    }
    if (coin(35)) {
        s += "<REFLECT>" + pick({ "recheck S4", "<PAUSE>tone", "" }) + "</REFLECT>";
        s += "<FINAL_ANSWER>" + pick({ "(D) 15th", "(b) 12th", "A", "" }) + "</FINAL_ANSWER>";
    }
    if (coin(10)) {
        s += pick({ " trailing words", "</THINK>", "<RESPONSE>", "<BOGUS>x</BOGUS>" });
    }
    if (coin(5)) {
        const size_t cut = rng() % (s.size() + 1);
        s                = s.substr(0, cut);
    }
    return s;
}

} // namespace fuzz
