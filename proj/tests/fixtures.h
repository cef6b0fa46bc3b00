#pragma once

// Trace fixtures shared by several test binaries.

#include <string>

namespace fixture {

inline const std::string bad_case_a_summary =
    "<THINK><REASONING>\n"
    "3. Evaluating Options:\n"
    "  - (a) A table: the central focus isn't just about assembling a table.\n"
    "  - (c) A bed: A bed typically features beveled edges.\n"
    "4. Concluding: it can be inferred that the speakers are assembling a bed.\n"
    "</REASONING>\n"
    "<SUMMARY> The speakers are differentiated by focusing on the Bevel Edge assembly of a bed. By eliminating other "
    "less relevant options through reasoning, the final conclusion is that they are assembling a bed.\n"
    "</SUMMARY>\n</THINK>";

inline const std::string bad_case_b_turns =
    "[S1] “Ship date is the 12th if QA passes.”\n"
    "[S3] “QA won’t finish by the 12th.”\n"
    "[S4] “Set the launch to the 15th.”\n"
    "[S2] “Not the 5th\u2014I said the 15th.”\n"
    "[S1] “Agreed.”";

inline const std::string bad_case_d =
    "<THINK>\n"
    "<PLANNING>Analyze the audio input to determine the speaker's emotional state.</PLANNING>\n"
    "<CAPTION><ENV>Quiet indoor environment with no significant background noise.</ENV>"
    "<ASR>I'm just saying, if I see one more picture of Ed Begley Jr. in that stupid electric car...</ASR>"
    "<SPEAKER>Male voice, speaking at a normal volume, slightly drawn out pacing.</SPEAKER></CAPTION>\n"
    "<REASONING> The speaker is talking about Ed Begley Jr. and an electric car. Given that electric cars are generally "
    "associated with positive environmental efforts, the initial semantic assumption points toward (d) Enthusiastic "
    "support. </REASONING>\n"
    "<SUMMARY>The audio transcript involves a well-known environmentalist and an electric car.</SUMMARY>\n"
    "</THINK>";

inline const std::string bad_case_d_reflection =
    "<REFLECT> Wait, analyzing the transcript again, the speaker starts with \"I'm just saying.\" I will pivot from "
    "enthusiastic support to indifference.</REFLECT>\n"
    "<FINAL_ANSWER>Based on the use of passive conversational fillers like \"I'm just saying,\" the speaker does not "
    "demonstrate strong emotional investment in the topic. The most likely reaction is (b) Indifference.</FINAL_ANSWER>";

// Fully tagged trace for the two-speaker item used across tests.
inline const std::string strict_trace =
    "<THINK><PLANNING>Find who proposes the date.</PLANNING>"
    "<CAPTION><BGM>steady hvac hum</BGM>"
    "<SPEAKER>S1: 'Ship date is the 12th if QA passes.' ; S4: 'Set the launch to the 15th.'</SPEAKER>"
    "<ASR>Ship date is the 12th. Set the launch to the 15th.</ASR></CAPTION>"
    "<REASONING>S4 moves the date, so (D) is correct.</REASONING>"
    "<SUMMARY>The final launch date is the 15th, option (D).</SUMMARY></THINK>"
    "<RESPONSE>(D) 15th</RESPONSE>";

} // namespace fixture
