#include "auralrl/decode.h"

#include "auralrl/error.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace auralrl {

vocabulary::vocabulary() {
    add(pause_text);
    add(eos_text);
}

token_id vocabulary::add(std::string_view text) {
    if (auto id = find(text)) {
        return *id;
    }
    const auto id = static_cast<token_id>(texts_.size());
    texts_.emplace_back(text);
    index_.emplace(std::string(text), id);
    return id;
}

std::optional<token_id> vocabulary::find(std::string_view text) const {
    auto it = index_.find(std::string(text));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

token_id vocabulary::at(std::string_view text) const {
    if (auto id = find(text)) {
        return *id;
    }
    throw error(errc::invalid_argument, "token '" + std::string(text) + "' is not in the vocabulary");
}

const std::string & vocabulary::text(token_id id) const {
    static const std::string latent(latent_text);
    if (id == k_latent_placeholder) {
        return latent;
    }
    if (id < 0 || static_cast<size_t>(id) >= texts_.size()) {
        throw error(errc::invalid_argument, "token id " + std::to_string(id) + " out of range");
    }
    return texts_[static_cast<size_t>(id)];
}

std::string vocabulary::render(const std::vector<token_id> & tokens, std::string_view sep) const {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += text(tokens[i]);
    }
    return out;
}

void decode_config::validate() const {
    // tau_abort == tau_pause is allowed: it closes the pause band entirely.
    if (!(0.0 <= tau_abort && tau_abort <= tau_pause && tau_pause <= 1.0)) {
        throw error(errc::invalid_config, "decode config needs 0 <= tau_abort <= tau_pause <= 1");
    }
    if (window_n < 1) {
        throw error(errc::invalid_config, "window_n must be at least 1");
    }
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
        throw error(errc::invalid_config, "tail_fraction must be in (0, 1]");
    }
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw error(errc::invalid_config, "temperature must be positive");
    }
    if (!std::isfinite(beta_ac)) {
        throw error(errc::invalid_config, "beta_ac must be finite");
    }
    if (max_tokens < 1) {
        throw error(errc::invalid_config, "max_tokens must be at least 1");
    }
}

std::string_view status_name(decode_status s) {
    switch (s) {
        case decode_status::completed:        return "COMPLETED";
        case decode_status::aborted:          return "ABORTED";
        case decode_status::budget_exhausted: return "BUDGET_EXHAUSTED";
    }
    return "";
}

namespace {

double window_mean(const std::deque<double> & window) {
    double sum = 0.0;
    for (double c : window) {
        sum += c;
    }
    return sum / static_cast<double>(window.size());
}

void check_distribution(const std::vector<double> & p, size_t vocab_size) {
    if (p.size() != vocab_size) {
        throw error(errc::invalid_distribution, "model returned " + std::to_string(p.size()) +
                                                    " probabilities for a vocabulary of " + std::to_string(vocab_size));
    }
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw error(errc::invalid_distribution, "model returned a negative or non-finite probability");
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw error(errc::invalid_distribution, "model distribution sums to " + std::to_string(sum));
    }
}

// Adds the PAUSE bias in logit space and applies temperature.
std::vector<double> sampling_distribution(const std::vector<double> & p, token_id pause, double bias, double temperature) {
    if (bias == 0.0 && temperature == 1.0) {
        return p;
    }
    std::vector<double> logits(p.size());
    double              max_logit = -std::numeric_limits<double>::infinity();
    for (size_t v = 0; v < p.size(); ++v) {
        double l = p[v] > 0.0 ? std::log(p[v]) : -std::numeric_limits<double>::infinity();
        if (static_cast<token_id>(v) == pause) {
            l += bias;
        }
        logits[v] = l / temperature;
        max_logit = std::max(max_logit, logits[v]);
    }
    std::vector<double> q(p.size());
    double              z = 0.0;
    for (size_t v = 0; v < p.size(); ++v) {
        q[v] = std::isinf(logits[v]) ? 0.0 : std::exp(logits[v] - max_logit);
        z += q[v];
    }
    for (double & v : q) {
        v /= z;
    }
    return q;
}

} // namespace

std::vector<double> window_scores(const std::vector<double> & confidences, size_t n) {
    if (confidences.empty()) {
        throw error(errc::empty_input, "window_scores: no confidences");
    }
    if (n < 1) {
        throw error(errc::invalid_argument, "window_scores: window size must be at least 1");
    }
    std::vector<double> out;
    out.reserve(confidences.size());
    std::deque<double> window;
    for (double c : confidences) {
        window.push_back(c);
        if (window.size() > n) {
            window.pop_front();
        }
        out.push_back(window_mean(window));
    }
    return out;
}

lgc_summary lgc(const std::vector<double> & scores, double tail_fraction) {
    if (scores.empty()) {
        throw error(errc::empty_input, "lgc: no window scores");
    }
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
        throw error(errc::invalid_argument, "lgc: tail_fraction must be in (0, 1]");
    }
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    const auto k = std::clamp<size_t>(static_cast<size_t>(std::ceil(tail_fraction * static_cast<double>(sorted.size()) - 1e-12)),
                                      1, sorted.size());
    double sum = 0.0;
    for (size_t i = 0; i < k; ++i) {
        sum += sorted[i];
    }
    return { sorted.front(), std::clamp(sum / static_cast<double>(k), sorted.front(), sorted[k - 1]) };
}

double keyword_bias(std::string_view recent_text, const decode_config & config) {
    size_t i = 0;
    while (i < recent_text.size()) {
        if (!std::isalnum(static_cast<unsigned char>(recent_text[i]))) {
            ++i;
            continue;
        }
        std::string word;
        while (i < recent_text.size() && std::isalnum(static_cast<unsigned char>(recent_text[i]))) {
            word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(recent_text[i]))));
            ++i;
        }
        if (config.keywords.count(word) != 0) {
            return config.beta_ac;
        }
    }
    return 0.0;
}

trajectory_record run_decode(decode_model & model, decode_state state, const decode_config & config, uint64_t seed) {
    config.validate();
    const vocabulary & vocab = model.vocab();
    const token_id     pause = vocab.pause_id();
    const token_id     eos   = vocab.eos_id();

    std::mt19937_64                        rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    trajectory_record  rec;
    std::deque<double> window;
    double             gate_lgc = std::numeric_limits<double>::infinity();
    bool               stopped  = false;

    for (size_t t = 0; t < config.max_tokens; ++t) {
        const std::vector<double> p = model.next_step(state);
        check_distribution(p, vocab.size());

        double bias = 0.0;
        if (config.keyword_bias && config.beta_ac != 0.0 && !state.visible.empty()) {
            const size_t from = state.visible.size() > config.window_n ? state.visible.size() - config.window_n : 0;
            const std::vector<token_id> recent(state.visible.begin() + static_cast<std::ptrdiff_t>(from), state.visible.end());
            bias = keyword_bias(vocab.render(recent), config);
        }
        const std::vector<double> q = sampling_distribution(p, pause, bias, config.temperature);

        // PAUSE is never emitted as a visible token; its mass only lowers the
        // confidence of whatever visible token is sampled.
        double visible_mass = 0.0;
        for (size_t v = 0; v < q.size(); ++v) {
            if (static_cast<token_id>(v) != pause) {
                visible_mass += q[v];
            }
        }
        if (!(visible_mass > 0.0)) {
            rec.status         = decode_status::aborted;
            rec.abort_position = rec.visible_tokens.size();
            stopped            = true;
            break;
        }
        const double u     = unit(rng) * visible_mass;
        double       acc   = 0.0;
        token_id     token = -1;
        for (size_t v = 0; v < q.size(); ++v) {
            if (static_cast<token_id>(v) == pause || q[v] <= 0.0) {
                continue;
            }
            acc += q[v];
            token = static_cast<token_id>(v);
            if (u < acc) {
                break;
            }
        }
        if (token == eos) {
            rec.status = decode_status::completed;
            stopped    = true;
            break;
        }

        const double confidence = q[static_cast<size_t>(token)];
        state.visible.push_back(token);
        rec.visible_tokens.push_back(token);
        rec.internal_tokens.push_back(token);
        rec.confidences.push_back(confidence);

        window.push_back(confidence);
        if (window.size() > config.window_n) {
            window.pop_front();
        }
        const double score = window_mean(window);
        rec.window_scores.push_back(score);
        gate_lgc = std::min(gate_lgc, score);

        if (gate_lgc <= config.tau_abort) {
            rec.status         = decode_status::aborted;
            rec.abort_position = rec.visible_tokens.size() - 1;
            stopped            = true;
            break;
        }
        if (gate_lgc <= config.tau_pause && rec.pause_events.size() < config.max_pauses) {
            rec.pause_events.push_back({ rec.visible_tokens.size() - 1, config.latent_len, gate_lgc });
            rec.internal_tokens.push_back(pause);
            for (size_t k = 0; k < config.latent_len; ++k) {
                model.latent_step(state);
                rec.internal_tokens.push_back(k_latent_placeholder);
            }
            window.clear();
            gate_lgc = std::numeric_limits<double>::infinity();
        }
    }
    if (!stopped) {
        rec.status = decode_status::budget_exhausted;
    }
    if (!rec.window_scores.empty()) {
        const auto s  = lgc(rec.window_scores, config.tail_fraction);
        rec.lgc       = s.lgc;
        rec.tail_mean = s.tail_mean;
    }
    return rec;
}

std::vector<token_id> visible_view(const std::vector<token_id> & internal, token_id pause_id) {
    std::vector<token_id> out;
    for (token_id t : internal) {
        if (t != pause_id && t != k_latent_placeholder) {
            out.push_back(t);
        }
    }
    return out;
}

nlohmann::ordered_json trajectory_to_json(const trajectory_record & t, const vocabulary & vocab) {
    nlohmann::ordered_json j;
    auto                   texts = [&](const std::vector<token_id> & ids) {
        std::vector<std::string> out;
        for (auto id : ids) {
            out.push_back(vocab.text(id));
        }
        return out;
    };
    j["visible_tokens"]  = texts(t.visible_tokens);
    j["internal_tokens"] = texts(t.internal_tokens);
    j["confidences"]     = t.confidences;
    j["window_scores"]   = t.window_scores;
    j["lgc"]             = t.lgc;
    j["tail_mean"]       = t.tail_mean;
    j["pause_events"]    = nlohmann::ordered_json::array();
    for (const auto & e : t.pause_events) {
        j["pause_events"].push_back({ { "position", e.position }, { "latent_count", e.latent_count }, { "gate_lgc", e.gate_lgc } });
    }
    j["status"]         = status_name(t.status);
    j["abort_position"] = t.abort_position ? nlohmann::ordered_json(*t.abort_position) : nlohmann::ordered_json(nullptr);
    return j;
}

scripted_model::scripted_model(std::vector<step> steps) : steps_(std::move(steps)) {
    for (const auto & s : steps_) {
        if (!(s.prob >= 0.0 && s.prob <= 1.0)) {
            throw error(errc::invalid_distribution, "scripted step probability must be in [0, 1]");
        }
        vocab_.add(s.top_token);
        double mass = s.prob;
        for (const auto & [tok, p] : s.alternatives) {
            if (!(p >= 0.0)) {
                throw error(errc::invalid_distribution, "scripted alternative probability must be non-negative");
            }
            vocab_.add(tok);
            mass += p;
        }
        if (mass > 1.0 + 1e-9) {
            throw error(errc::invalid_distribution, "scripted step probabilities exceed 1");
        }
    }
}

scripted_model scripted_model::from_jsonl(std::string_view text) {
    std::vector<step>  steps;
    std::istringstream in{ std::string(text) };
    std::string        line;
    size_t             lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            step       s;
            s.top_token = j.at("top_token").get<std::string>();
            s.prob      = j.at("prob").get<double>();
            if (j.contains("alternatives")) {
                const auto & alt = j.at("alternatives");
                if (alt.is_object()) {
                    for (const auto & [k, v] : alt.items()) {
                        s.alternatives.emplace_back(k, v.get<double>());
                    }
                } else {
                    for (const auto & a : alt) {
                        if (a.is_array()) {
                            s.alternatives.emplace_back(a.at(0).get<std::string>(), a.at(1).get<double>());
                        } else {
                            s.alternatives.emplace_back(a.at("token").get<std::string>(), a.at("prob").get<double>());
                        }
                    }
                }
            }
            steps.push_back(std::move(s));
        } catch (const nlohmann::json::exception & e) {
            throw error(errc::parse_error, "mock script line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return scripted_model(std::move(steps));
}

scripted_model scripted_model::from_file(const std::filesystem::path & path) {
    std::ifstream in(path);
    if (!in) {
        throw error(errc::io_error, "cannot open " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return from_jsonl(ss.str());
}

std::vector<double> scripted_model::next_step(decode_state & s) {
    std::vector<double> p(vocab_.size(), 0.0);
    const size_t        k = s.steps++;
    if (k >= steps_.size()) {
        p[static_cast<size_t>(vocab_.eos_id())] = 1.0;
        return p;
    }
    const step & st = steps_[k];
    p[static_cast<size_t>(vocab_.at(st.top_token))] += st.prob;
    double mass = st.prob;
    for (const auto & [tok, q] : st.alternatives) {
        p[static_cast<size_t>(vocab_.at(tok))] += q;
        mass += q;
    }
    // Unscripted mass sits on PAUSE.
    p[static_cast<size_t>(vocab_.pause_id())] += std::max(0.0, 1.0 - mass);
    return p;
}

void scripted_model::latent_step(decode_state & s) {
    ++s.latent_steps;
}

} // namespace auralrl
