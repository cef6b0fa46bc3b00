#include "auralrl/dataset.h"

#include "auralrl/error.h"
#include "auralrl/wav.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace auralrl {

namespace {

std::string qtype_name(question_type q) {
    return q == question_type::speech ? "speech" : "environment";
}

question_type qtype_from(const std::string & s) {
    if (s == "speech") {
        return question_type::speech;
    }
    if (s == "environment") {
        return question_type::environment;
    }
    throw error(errc::parse_error, "unknown question_type '" + s + "'");
}

template <typename T>
ordered_json opt_json(const std::optional<T> & v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

const choice * choice_by_label(const paqa_item & item, const std::string & label) {
    for (const auto & c : item.choices) {
        if (c.label == label) {
            return &c;
        }
    }
    return nullptr;
}

const std::vector<std::string> & env_nouns() {
    static const std::vector<std::string> nouns = {
        "music", "bgm", "noise", "noises", "background", "rain", "traffic", "hum", "static", "ambient",
        "environment", "hiss", "wind", "horn", "horns", "crowd", "applause", "birds", "hvac", "engine",
    };
    return nouns;
}

bool is_causal_word(const std::string & w) {
    return w == "suggests" || w == "suggest" || w == "indicates" || w == "indicate" || w == "means";
}

std::vector<std::string> sentences(std::string_view text) {
    std::vector<std::string> out;
    std::string              cur;
    for (char c : text) {
        if (c == '.' || c == '!' || c == '?' || c == '\n') {
            if (!cur.empty()) {
                out.push_back(cur);
            }
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) {
        out.push_back(cur);
    }
    return out;
}

std::string quote_line(const paqa_item & item, size_t asr_index) {
    std::string line;
    if (asr_index < item.turns.size()) {
        line += "[" + item.turns[asr_index].speaker_id + "] ";
    }
    return line + "\"" + item.asr[asr_index] + "\"";
}

// ASR snippet that best supports the gold option: the first one that contains
// the option text, else the highest SeqRatio against it.
std::optional<size_t> supporting_asr(const paqa_item & item) {
    const choice * gold = choice_by_label(item, item.gold);
    if (gold == nullptr || item.asr.empty()) {
        return std::nullopt;
    }
    const auto target = normalize_text(gold->text);
    if (target.empty()) {
        return std::nullopt;
    }
    const std::string needle = " " + target.str() + " ";
    size_t            best   = 0;
    double            best_phi = -1.0;
    for (size_t j = 0; j < item.asr.size(); ++j) {
        const auto snippet = normalize_text(item.asr[j]);
        if ((" " + snippet.str() + " ").find(needle) != std::string::npos) {
            return j;
        }
        const double phi = seq_ratio(target, snippet);
        if (phi > best_phi) {
            best_phi = phi;
            best     = j;
        }
    }
    return best;
}

std::string option_phrase(const paqa_item & item, const std::string & label) {
    std::string out = "(" + label + ")";
    if (const choice * c = choice_by_label(item, label); c != nullptr && !c->text.empty()) {
        out += " " + c->text;
    }
    return out;
}

} // namespace

size_t paqa_item::distinct_speakers() const {
    std::set<std::string> ids;
    for (const auto & t : turns) {
        ids.insert(canonical_speaker(t.speaker_id));
    }
    return ids.size();
}

void validate_item(const paqa_item & item) {
    if (item.id.empty()) {
        throw error(errc::invalid_argument, "item has an empty id");
    }
    if (choice_by_label(item, item.gold) == nullptr) {
        throw error(errc::invalid_argument, "item " + item.id + ": gold '" + item.gold + "' is not a choice label");
    }
    if (item.snr_db && !item.env_tag) {
        throw error(errc::invalid_argument, "item " + item.id + ": snr_db requires env_tag");
    }
    if (item.distinct_speakers() > 1 && !item.qpt) {
        throw error(errc::missing_qpt, "item " + item.id + ": multi-speaker item without a qpt score");
    }
    for (size_t i = 1; i < item.turns.size(); ++i) {
        if (item.turns[i].start_s < item.turns[i - 1].start_s) {
            throw error(errc::invalid_argument, "item " + item.id + ": turn start times decrease");
        }
    }
    if (item.reflection) {
        const auto & r = *item.reflection;
        if (r.response.empty() || r.reflect.empty() || r.final_answer.empty()) {
            throw error(errc::invalid_argument, "item " + item.id + ": reflection triplet has an empty part");
        }
    }
}

ordered_json item_to_json(const paqa_item & item) {
    ordered_json j;
    j["id"]         = item.id;
    j["audio_path"] = item.audio_path;
    j["question"]   = item.question;
    j["choices"]    = ordered_json::array();
    for (const auto & c : item.choices) {
        j["choices"].push_back({ { "label", c.label }, { "text", c.text } });
    }
    j["gold"]          = item.gold;
    j["question_type"] = qtype_name(item.qtype);
    j["env_tag"]       = opt_json(item.env_tag);
    j["snr_db"]        = opt_json(item.snr_db);
    j["turns"]         = ordered_json::array();
    for (const auto & t : item.turns) {
        j["turns"].push_back({ { "speaker_id", t.speaker_id },
                               { "clip_path", t.clip_path },
                               { "transcript", t.transcript },
                               { "start_s", t.start_s } });
    }
    j["asr"] = item.asr;
    if (item.qpt) {
        ordered_json q;
        q["value"]        = item.qpt->value;
        q["per_sentence"] = ordered_json::array();
        for (const auto & s : item.qpt->per_sentence) {
            q["per_sentence"].push_back({ { "sentence", s.sentence }, { "asr_index", s.best_asr }, { "phi", s.phi } });
        }
        j["qpt"] = std::move(q);
    } else {
        j["qpt"] = nullptr;
    }
    if (item.reflection) {
        j["reflection"] = { { "response", item.reflection->response },
                            { "reflect", item.reflection->reflect },
                            { "final_answer", item.reflection->final_answer } };
    } else {
        j["reflection"] = nullptr;
    }
    return j;
}

paqa_item item_from_json(const ordered_json & j) {
    try {
        paqa_item item;
        item.id         = j.at("id").get<std::string>();
        item.audio_path = j.value("audio_path", "");
        item.question   = j.value("question", "");
        for (const auto & c : j.at("choices")) {
            item.choices.push_back({ c.at("label").get<std::string>(), c.value("text", "") });
        }
        item.gold = j.at("gold").get<std::string>();
        if (j.contains("question_type")) {
            item.qtype = qtype_from(j.at("question_type").get<std::string>());
        }
        if (j.contains("env_tag") && !j.at("env_tag").is_null()) {
            item.env_tag = j.at("env_tag").get<std::string>();
        }
        if (j.contains("snr_db") && !j.at("snr_db").is_null()) {
            item.snr_db = j.at("snr_db").get<double>();
        }
        if (j.contains("turns")) {
            for (const auto & t : j.at("turns")) {
                item.turns.push_back({ t.at("speaker_id").get<std::string>(), t.value("clip_path", ""),
                                       t.value("transcript", ""), t.value("start_s", 0.0) });
            }
        }
        if (j.contains("asr")) {
            item.asr = j.at("asr").get<std::vector<std::string>>();
        }
        if (j.contains("qpt") && !j.at("qpt").is_null()) {
            qpt_score q;
            q.value = j.at("qpt").at("value").get<double>();
            for (const auto & s : j.at("qpt").value("per_sentence", ordered_json::array())) {
                q.per_sentence.push_back(
                    { s.at("sentence").get<size_t>(), s.at("asr_index").get<size_t>(), s.at("phi").get<double>() });
            }
            item.qpt = std::move(q);
        }
        if (j.contains("reflection") && !j.at("reflection").is_null()) {
            const auto & r  = j.at("reflection");
            item.reflection = reflection_triplet{ r.at("response").get<std::string>(), r.at("reflect").get<std::string>(),
                                                  r.at("final_answer").get<std::string>() };
        }
        validate_item(item);
        return item;
    } catch (const nlohmann::json::exception & e) {
        throw error(errc::parse_error, std::string("malformed item record: ") + e.what());
    }
}

std::string serialize_item(const paqa_item & item) {
    return item_to_json(item).dump();
}

std::vector<paqa_item> read_jsonl(const std::filesystem::path & path) {
    std::ifstream in(path);
    if (!in) {
        throw error(errc::io_error, "cannot open " + path.string());
    }
    std::vector<paqa_item> items;
    std::string            line;
    size_t                 lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::exception & e) {
            throw error(errc::parse_error, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        items.push_back(item_from_json(j));
    }
    return items;
}

void write_jsonl(const std::filesystem::path & path, const std::vector<paqa_item> & items) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw error(errc::io_error, "cannot write " + path.string());
    }
    for (const auto & item : items) {
        out << serialize_item(item) << '\n';
    }
}

std::filesystem::path stem_path(const std::filesystem::path & mixture, const char * stem) {
    auto p = mixture;
    p.replace_extension(std::string(".") + stem + ".wav");
    return p;
}

forge::forge(std::filesystem::path root) : root_(std::move(root)) {}

void forge::claim(const std::string & id) {
    if (id.empty()) {
        throw error(errc::invalid_argument, "item id must not be empty");
    }
    if (!ids_.insert(id).second) {
        throw error(errc::duplicate_id, "duplicate item id '" + id + "'");
    }
}

paqa_item forge::build_se_item(const std::string & id, const audio_clip & speech, const audio_clip & noise,
                               const qa_spec & qa, const std::string & env_label, const mix_spec & spec) {
    if (ids_.count(id) != 0) {
        throw error(errc::duplicate_id, "duplicate item id '" + id + "'");
    }
    const mix_result mix = mix_at_snr(speech, noise, spec);
    claim(id);

    paqa_item item;
    item.id         = id;
    item.audio_path = "audio/" + id + ".wav";
    item.question   = qa.question;
    item.choices    = qa.choices;
    item.gold       = qa.gold;
    item.qtype      = qa.qtype;
    item.env_tag    = env_label;
    item.snr_db     = spec.snr_db;
    validate_item(item);

    const auto mixture_path = root_ / item.audio_path;
    write_wav(mixture_path, mix.mixture);
    write_wav(stem_path(mixture_path, "speech"), mix.speech);
    audio_clip noise_stem = mix.scaled_noise;
    for (double & s : noise_stem.samples) {
        s *= mix.master_gain;
    }
    write_wav(stem_path(mixture_path, "noise"), noise_stem);
    return item;
}

paqa_item forge::build_ss_item(const std::string & id, const std::vector<turn_clip> & turns, const qa_spec & qa,
                               double gap_ms, const std::vector<std::string> & asr_reference) {
    if (ids_.count(id) != 0) {
        throw error(errc::duplicate_id, "duplicate item id '" + id + "'");
    }
    if (!(gap_ms >= 0.0)) {
        throw error(errc::invalid_argument, "gap_ms must be non-negative");
    }
    std::set<std::string> speakers;
    for (const auto & t : turns) {
        speakers.insert(canonical_speaker(t.speaker_id));
    }
    if (turns.size() < 2 || speakers.size() < 2) {
        throw error(errc::too_few_speakers, "item " + id + ": need at least two turns from two distinct speakers");
    }
    const int rate = turns.front().clip.sample_rate;
    for (const auto & t : turns) {
        if (t.clip.sample_rate != rate) {
            throw error(errc::sample_rate_mismatch, "item " + id + ": turn clips have different sample rates");
        }
        if (t.clip.samples.empty()) {
            throw error(errc::empty_clip, "item " + id + ": empty turn clip for " + t.speaker_id);
        }
    }

    paqa_item item;
    item.id         = id;
    item.audio_path = "audio/" + id + ".wav";
    item.question   = qa.question;
    item.choices    = qa.choices;
    item.gold       = qa.gold;
    item.qtype      = qa.qtype;

    audio_clip   conversation;
    conversation.sample_rate = rate;
    const auto   gap_samples = static_cast<size_t>(gap_ms * rate / 1000.0 + 0.5);
    std::vector<std::string> transcripts;
    for (size_t i = 0; i < turns.size(); ++i) {
        if (i > 0) {
            conversation.samples.insert(conversation.samples.end(), gap_samples, 0.0);
        }
        const double start = static_cast<double>(conversation.samples.size()) / rate;
        conversation.samples.insert(conversation.samples.end(), turns[i].clip.samples.begin(), turns[i].clip.samples.end());
        item.turns.push_back({ turns[i].speaker_id, turns[i].clip_path, turns[i].transcript, start });
        transcripts.push_back(turns[i].transcript);
    }
    item.asr = transcripts;
    item.qpt = qpt(transcripts, asr_reference.empty() ? transcripts : asr_reference);
    validate_item(item);
    claim(id);
    write_wav(root_ / item.audio_path, conversation);
    return item;
}

qpt_partition qpt_filter(const std::vector<paqa_item> & items, double threshold) {
    qpt_partition out;
    for (const auto & item : items) {
        if (item.distinct_speakers() > 1) {
            if (!item.qpt) {
                throw error(errc::missing_qpt, "item " + item.id + ": multi-speaker item without a qpt score");
            }
            if (item.qpt->value < threshold) {
                out.dropped.push_back(item);
                continue;
            }
        }
        out.kept.push_back(item);
    }
    return out;
}

std::string_view error_kind_name(error_kind kind) {
    switch (kind) {
        case error_kind::option_mismatch:     return "OPTION_MISMATCH";
        case error_kind::attribution_mistake: return "ATTRIBUTION_MISTAKE";
        case error_kind::hallucinated_quote:  return "HALLUCINATED_QUOTE";
        case error_kind::noise_misuse:        return "NOISE_MISUSE";
    }
    return "";
}

std::string canonical_speaker(std::string_view label) {
    std::string out;
    for (char c : label) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (out.rfind("speaker", 0) == 0 && out.size() > 7) {
        out.erase(0, 7);
    }
    if (out.size() > 1 && out[0] == 's' &&
        std::all_of(out.begin() + 1, out.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        out.erase(0, 1);
    }
    return out;
}

std::optional<std::string> find_noise_misuse(const trace_document & doc, const paqa_item & item) {
    std::set<std::string> nouns(env_nouns().begin(), env_nouns().end());
    if (item.env_tag) {
        for (const auto & w : split_words(normalize_text(*item.env_tag))) {
            if (w.size() >= 4 && w != "with" && w != "from" && w != "some" && w != "that") {
                nouns.insert(w);
            }
        }
    }
    for (const auto * seg : find_all(doc, tag_kind::reasoning)) {
        for (const auto & sentence : sentences(seg->text)) {
            const auto words  = split_words(normalize_text(sentence));
            bool       env    = false;
            bool       causal = false;
            for (const auto & w : words) {
                env    = env || nouns.count(w) != 0;
                causal = causal || is_causal_word(w);
            }
            if (env && causal) {
                const auto first = sentence.find_first_not_of(" \t\r-0123456789");
                return first == std::string::npos ? sentence : sentence.substr(first);
            }
        }
    }
    return std::nullopt;
}

error_report detect_errors(const paqa_item & item, const trace_document & trace) {
    error_report rep;
    auto add = [&](error_kind k, std::string evidence) {
        rep.kinds.insert(k);
        rep.evidence.emplace_back(k, std::move(evidence));
    };

    const auto answer = extract_answer(trace, item.choices);
    if (answer.answer != item.gold) {
        add(error_kind::option_mismatch,
            "answered '" + answer.answer + "' but gold is '" + item.gold + "'");
    }

    std::vector<normalized_text> asr;
    for (const auto & a : item.asr) {
        asr.push_back(normalize_text(a));
    }
    const bool turns_aligned = !item.turns.empty() && item.turns.size() == item.asr.size();
    for (const auto & q : extract_speaker_quotes(trace)) {
        const auto quote = normalize_text(q.quote);
        size_t     best_j = 0;
        double     best   = 0.0;
        for (size_t j = 0; j < asr.size(); ++j) {
            const double phi = seq_ratio(quote, asr[j]);
            if (phi > best) {
                best   = phi;
                best_j = j;
            }
        }
        if (best < k_hallucination_phi) {
            std::ostringstream ev;
            ev << q.speaker << ": \"" << q.quote << "\" (best overlap " << best << ")";
            add(error_kind::hallucinated_quote, ev.str());
        } else if (turns_aligned && canonical_speaker(item.turns[best_j].speaker_id) != canonical_speaker(q.speaker)) {
            add(error_kind::attribution_mistake, q.speaker + ": \"" + q.quote + "\" is spoken by " +
                                                     item.turns[best_j].speaker_id);
        }
    }

    if (item.qtype == question_type::speech) {
        if (auto sentence = find_noise_misuse(trace, item)) {
            add(error_kind::noise_misuse, *sentence);
        }
    }
    return rep;
}

std::string run_reflection_hook(const reflection_hook & hook, const std::string & stdin_text) {
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0) {
        throw error(errc::hook_failed, "reflection hook: pipe failed");
    }
    if (pipe(from_child) != 0) {
        close(to_child[0]);
        close(to_child[1]);
        throw error(errc::hook_failed, "reflection hook: pipe failed");
    }
    const pid_t pid = fork();
    if (pid < 0) {
        throw error(errc::hook_failed, "reflection hook: fork failed");
    }
    if (pid == 0) {
        dup2(to_child[0], STDIN_FILENO);
        dup2(from_child[1], STDOUT_FILENO);
        close(to_child[0]);
        close(to_child[1]);
        close(from_child[0]);
        close(from_child[1]);
        execl("/bin/sh", "sh", "-c", hook.command.c_str(), static_cast<char *>(nullptr));
        _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    size_t written = 0;
    while (written < stdin_text.size()) {
        const ssize_t n = write(to_child[1], stdin_text.data() + written, stdin_text.size() - written);
        if (n <= 0) {
            break;
        }
        written += static_cast<size_t>(n);
    }
    close(to_child[1]);
    std::string out;
    char        buf[4096];
    ssize_t     n;
    while ((n = read(from_child[0], buf, sizeof(buf))) > 0) {
        out.append(buf, static_cast<size_t>(n));
    }
    close(from_child[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        throw error(errc::hook_failed, "reflection hook '" + hook.command + "' exited with failure");
    }
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) {
        out.pop_back();
    }
    if (out.empty()) {
        throw error(errc::hook_failed, "reflection hook produced no text");
    }
    return out;
}

reflection_triplet build_reflection_triplet(paqa_item & item, const std::string & bad_response, const error_report & report,
                                            const std::optional<reflection_hook> & hook) {
    if (report.empty() && !hook) {
        throw error(errc::nothing_to_reflect, "item " + item.id + ": no detected errors and no reflection hook");
    }
    reflection_triplet t;
    t.response = bad_response.empty() ? std::string("(no answer)") : bad_response;

    if (hook) {
        ordered_json payload = item_to_json(item);
        payload["bad_response"] = bad_response;
        ordered_json errors     = ordered_json::array();
        for (const auto & [kind, ev] : report.evidence) {
            errors.push_back({ { "kind", error_kind_name(kind) }, { "evidence", ev } });
        }
        payload["errors"] = std::move(errors);
        t.reflect         = run_reflection_hook(*hook, payload.dump());
    } else {
        std::ostringstream r;
        r << "Problems found in <RESPONSE>:\n";
        for (const auto & [kind, ev] : report.evidence) {
            switch (kind) {
                case error_kind::option_mismatch: {
                    const auto   bad    = extract_answer(parse_trace(bad_response), item.choices);
                    std::string  picked = bad.answer.empty() ? std::string("no option") : option_phrase(item, bad.answer);
                    r << "- Option mismatch: the response selected " << picked << ", but the evidence supports "
                      << option_phrase(item, item.gold) << ".\n";
                    break;
                }
                case error_kind::attribution_mistake:
                    r << "- Speaker attribution mistake: " << ev << " according to <ASR>.\n";
                    break;
                case error_kind::hallucinated_quote:
                    r << "- Hallucinated quote not found in <ASR>: " << ev << ".\n";
                    break;
                case error_kind::noise_misuse:
                    r << "- Background sound used as evidence for speech content: \"" << ev << "\".\n";
                    break;
            }
        }
        r << "Corrections:\n";
        if (auto j = supporting_asr(item)) {
            r << "- Re-read <ASR>: " << quote_line(item, *j) << "\n";
        } else {
            r << "- Re-read <ASR> and answer only from what was said.\n";
        }
        r << "- Check <SPEAKER>: tie each quote to the turn in which it is actually spoken.\n";
        r << "- Treat <BGM> (" << (item.env_tag ? *item.env_tag : std::string("no background tag"))
          << ") as scene context only, never as evidence for what a speaker said.\n";
        r << "Uncertainties:\n";
        if (report.has(error_kind::hallucinated_quote)) {
            r << "- Quoted content outside the transcript cannot be verified and is dropped.";
        } else {
            r << "- None beyond the issues above.";
        }
        t.reflect = r.str();
    }
    t.final_answer = "The answer is " + option_phrase(item, item.gold) + ".";
    item.reflection = t;
    return t;
}

std::string render_triplet(const reflection_triplet & t) {
    return "<RESPONSE>" + t.response + "</RESPONSE>\n<REFLECT>" + t.reflect + "</REFLECT>\n<FINAL_ANSWER>" +
           t.final_answer + "</FINAL_ANSWER>";
}

} // namespace auralrl
