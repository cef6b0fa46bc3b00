#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace auralrl {

using token_id = int32_t;

// Stands in for a latent step in internal token streams; never a vocabulary id.
inline constexpr token_id k_latent_placeholder = -1;

class vocabulary {
  public:
    static constexpr std::string_view pause_text = "<PAUSE>";
    static constexpr std::string_view eos_text   = "</s>";
    static constexpr std::string_view latent_text = "<LATENT>";

    // Starts with <PAUSE> (id 0) and </s> (id 1).
    vocabulary();

    token_id                add(std::string_view text);
    std::optional<token_id> find(std::string_view text) const;
    token_id                at(std::string_view text) const;
    const std::string &     text(token_id id) const;
    size_t                  size() const noexcept { return texts_.size(); }

    token_id pause_id() const noexcept { return 0; }
    token_id eos_id() const noexcept { return 1; }

    std::string render(const std::vector<token_id> & tokens, std::string_view sep = " ") const;

  private:
    std::vector<std::string>                  texts_;
    std::unordered_map<std::string, token_id> index_;
};

struct decode_state {
    std::vector<token_id> prompt;
    std::vector<token_id> visible;
    size_t                steps        = 0; // next_step calls served
    size_t                latent_steps = 0;
    std::vector<double>   hidden;           // model-owned scratch
};

// next_step returns a distribution over the whole vocabulary (PAUSE included)
// for the next visible token. latent_step refines state without emitting.
class decode_model {
  public:
    virtual ~decode_model()                                 = default;
    virtual const vocabulary &  vocab() const               = 0;
    virtual std::vector<double> next_step(decode_state & s) = 0;
    virtual void                latent_step(decode_state & s) = 0;
};

struct decode_config {
    double                tau_pause     = 0.5;
    double                tau_abort     = 0.05;
    size_t                window_n      = 8;
    double                tail_fraction = 0.15;
    size_t                max_pauses    = 3;
    size_t                latent_len    = 64;
    double                beta_ac       = 2.0;
    bool                  keyword_bias  = true;
    std::set<std::string> keywords      = { "tone", "pitch", "noise", "emotion" };
    size_t                max_tokens    = 1024;
    double                temperature   = 1.0;

    void validate() const;
};

enum class decode_status { completed, aborted, budget_exhausted };

std::string_view status_name(decode_status s);

struct pause_event {
    size_t position;     // index of the last visible token before the pause
    size_t latent_count;
    double gate_lgc;     // gating statistic when the pause fired
};

struct trajectory_record {
    std::vector<token_id>   visible_tokens;
    std::vector<token_id>   internal_tokens;
    std::vector<double>     confidences;
    std::vector<double>     window_scores;
    double                  lgc       = 1.0;
    double                  tail_mean = 1.0;
    std::vector<pause_event> pause_events;
    decode_status           status = decode_status::completed;
    std::optional<size_t>   abort_position;
};

// Mean of the last n confidences at each position; shorter prefixes use what
// is available.
std::vector<double> window_scores(const std::vector<double> & confidences, size_t n);

struct lgc_summary {
    double lgc;       // minimum window score, used for gating
    double tail_mean; // mean of the lowest ceil(tail_fraction * count) scores
};

lgc_summary lgc(const std::vector<double> & window_scores, double tail_fraction);

double keyword_bias(std::string_view recent_text, const decode_config & config);

trajectory_record run_decode(decode_model & model, decode_state state, const decode_config & config, uint64_t seed);

// Removes PAUSE markers and latent placeholders.
std::vector<token_id> visible_view(const std::vector<token_id> & internal, token_id pause_id);

nlohmann::ordered_json trajectory_to_json(const trajectory_record & t, const vocabulary & vocab);

// Table-driven model: step k returns the k-th scripted distribution, then </s>.
class scripted_model : public decode_model {
  public:
    struct step {
        std::string                                      top_token;
        double                                           prob = 1.0;
        std::vector<std::pair<std::string, double>>      alternatives;
    };

    explicit scripted_model(std::vector<step> steps);

    static scripted_model from_jsonl(std::string_view text);
    static scripted_model from_file(const std::filesystem::path & path);

    const vocabulary &  vocab() const override { return vocab_; }
    std::vector<double> next_step(decode_state & s) override;
    void                latent_step(decode_state & s) override;

  private:
    vocabulary          vocab_;
    std::vector<step>   steps_;
};

} // namespace auralrl
