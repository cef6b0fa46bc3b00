#include "auralrl/config.h"

#include "auralrl/error.h"

#include <fstream>
#include <sstream>

namespace auralrl {

void app_config::validate() const {
    weights.validate();
    length.validate();
    decode.validate();
    trainer.toy_length.validate();
    if (!(trainer.lr >= 0.0) || !(trainer.toy_lr >= 0.0) || !(trainer.sft_lr >= 0.0) || !(trainer.kl_beta >= 0.0)) {
        throw error(errc::invalid_config, "trainer rates must be non-negative");
    }
    if (trainer.group_size < 2) {
        throw error(errc::invalid_config, "trainer.group_size must be at least 2");
    }
    if (trainer.steps == 0 || trainer.toy_max_tokens == 0) {
        throw error(errc::invalid_config, "trainer.steps and trainer.toy_max_tokens must be positive");
    }
    if (!(dataset.qpt_threshold >= 0.0 && dataset.qpt_threshold <= 1.0)) {
        throw error(errc::invalid_config, "dataset.qpt_threshold must be in [0, 1]");
    }
}

toy_train_config app_config::toy_config(uint64_t seed, size_t jobs) const {
    toy_train_config t;
    t.steps             = trainer.steps;
    t.group_size        = trainer.group_size;
    t.lr                = trainer.toy_lr;
    t.kl_beta           = trainer.kl_beta;
    t.sft_steps         = trainer.sft_steps;
    t.sft_lr            = trainer.sft_lr;
    t.jobs              = jobs;
    t.seed              = seed;
    t.decode            = decode;
    t.decode.max_tokens = trainer.toy_max_tokens;
    t.weights           = weights;
    t.length            = trainer.toy_length;
    return t;
}

template <typename T> static void read_opt(const nlohmann::ordered_json & j, const char * key, T & out) {
    if (j.contains(key) && !j.at(key).is_null()) {
        out = j.at(key).get<T>();
    }
}

static void check_keys(const nlohmann::ordered_json & j, const char * section, std::initializer_list<const char *> keys) {
    if (!j.is_object()) {
        throw error(errc::invalid_config, std::string("config section '") + section + "' must be an object");
    }
    for (const auto & [k, v] : j.items()) {
        bool known = false;
        for (const char * key : keys) {
            known = known || k == key;
        }
        if (!known) {
            throw error(errc::invalid_config, std::string("unknown key '") + k + "' in config section '" + section + "'");
        }
    }
}

app_config config_from_json(const nlohmann::ordered_json & j) {
    app_config c;
    try {
        check_keys(j, "root", { "reward", "length", "decode", "trainer", "dataset" });
        if (j.contains("reward")) {
            const auto & r = j.at("reward");
            check_keys(r, "reward", { "w_acc", "w_cons", "w_fmt", "w_len", "lambda_fid", "lambda_align" });
            read_opt(r, "w_acc", c.weights.w_acc);
            read_opt(r, "w_cons", c.weights.w_cons);
            read_opt(r, "w_fmt", c.weights.w_fmt);
            read_opt(r, "w_len", c.weights.w_len);
            read_opt(r, "lambda_fid", c.weights.lambda_fid);
            read_opt(r, "lambda_align", c.weights.lambda_align);
        }
        if (j.contains("length")) {
            const auto & l = j.at("length");
            check_keys(l, "length", { "t_min", "t_max" });
            read_opt(l, "t_min", c.length.t_min);
            read_opt(l, "t_max", c.length.t_max);
        }
        if (j.contains("decode")) {
            const auto & d = j.at("decode");
            check_keys(d, "decode", { "tau_pause", "tau_abort", "window_n", "tail_fraction", "max_pauses", "latent_len",
                                      "beta_ac", "keyword_bias", "keywords", "max_tokens", "temperature" });
            read_opt(d, "tau_pause", c.decode.tau_pause);
            read_opt(d, "tau_abort", c.decode.tau_abort);
            read_opt(d, "window_n", c.decode.window_n);
            read_opt(d, "tail_fraction", c.decode.tail_fraction);
            read_opt(d, "max_pauses", c.decode.max_pauses);
            read_opt(d, "latent_len", c.decode.latent_len);
            read_opt(d, "beta_ac", c.decode.beta_ac);
            read_opt(d, "keyword_bias", c.decode.keyword_bias);
            read_opt(d, "keywords", c.decode.keywords);
            read_opt(d, "max_tokens", c.decode.max_tokens);
            read_opt(d, "temperature", c.decode.temperature);
        }
        if (j.contains("trainer")) {
            const auto & t = j.at("trainer");
            check_keys(t, "trainer", { "lr", "toy_lr", "kl_beta", "group_size", "steps", "sft_steps", "sft_lr",
                                       "toy_max_tokens", "toy_t_min", "toy_t_max" });
            read_opt(t, "lr", c.trainer.lr);
            read_opt(t, "toy_lr", c.trainer.toy_lr);
            read_opt(t, "kl_beta", c.trainer.kl_beta);
            read_opt(t, "group_size", c.trainer.group_size);
            read_opt(t, "steps", c.trainer.steps);
            read_opt(t, "sft_steps", c.trainer.sft_steps);
            read_opt(t, "sft_lr", c.trainer.sft_lr);
            read_opt(t, "toy_max_tokens", c.trainer.toy_max_tokens);
            read_opt(t, "toy_t_min", c.trainer.toy_length.t_min);
            read_opt(t, "toy_t_max", c.trainer.toy_length.t_max);
        }
        if (j.contains("dataset")) {
            const auto & d = j.at("dataset");
            check_keys(d, "dataset", { "items", "root", "qpt_threshold" });
            if (d.contains("items") && !d.at("items").is_null()) {
                c.dataset.items = d.at("items").get<std::string>();
            }
            if (d.contains("root") && !d.at("root").is_null()) {
                c.dataset.root = d.at("root").get<std::string>();
            }
            read_opt(d, "qpt_threshold", c.dataset.qpt_threshold);
        }
    } catch (const nlohmann::json::exception & e) {
        throw error(errc::invalid_config, std::string("bad config value: ") + e.what());
    }
    c.validate();
    return c;
}

app_config load_config(const std::filesystem::path & path) {
    std::ifstream in(path);
    if (!in) {
        throw error(errc::io_error, "cannot open config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(ss.str());
    } catch (const nlohmann::json::exception & e) {
        throw error(errc::parse_error, "config is not valid JSON: " + std::string(e.what()));
    }
    app_config c = config_from_json(j);
    // Relative dataset paths resolve against the config file location.
    const auto base = path.parent_path();
    if (c.dataset.items && c.dataset.items->is_relative()) {
        c.dataset.items = base / *c.dataset.items;
    }
    if (c.dataset.root.is_relative()) {
        c.dataset.root = base / c.dataset.root;
    }
    return c;
}

nlohmann::ordered_json config_to_json(const app_config & c) {
    nlohmann::ordered_json j;
    j["reward"] = { { "w_acc", c.weights.w_acc },       { "w_cons", c.weights.w_cons },
                    { "w_fmt", c.weights.w_fmt },       { "w_len", c.weights.w_len },
                    { "lambda_fid", c.weights.lambda_fid }, { "lambda_align", c.weights.lambda_align } };
    j["length"] = { { "t_min", c.length.t_min }, { "t_max", c.length.t_max } };
    nlohmann::ordered_json d;
    d["tau_pause"]     = c.decode.tau_pause;
    d["tau_abort"]     = c.decode.tau_abort;
    d["window_n"]      = c.decode.window_n;
    d["tail_fraction"] = c.decode.tail_fraction;
    d["max_pauses"]    = c.decode.max_pauses;
    d["latent_len"]    = c.decode.latent_len;
    d["beta_ac"]       = c.decode.beta_ac;
    d["keyword_bias"]  = c.decode.keyword_bias;
    d["keywords"]      = c.decode.keywords;
    d["max_tokens"]    = c.decode.max_tokens;
    d["temperature"]   = c.decode.temperature;
    j["decode"]        = d;
    nlohmann::ordered_json t;
    t["lr"]             = c.trainer.lr;
    t["toy_lr"]         = c.trainer.toy_lr;
    t["kl_beta"]        = c.trainer.kl_beta;
    t["group_size"]     = c.trainer.group_size;
    t["steps"]          = c.trainer.steps;
    t["sft_steps"]      = c.trainer.sft_steps;
    t["sft_lr"]         = c.trainer.sft_lr;
    t["toy_max_tokens"] = c.trainer.toy_max_tokens;
    t["toy_t_min"]      = c.trainer.toy_length.t_min;
    t["toy_t_max"]      = c.trainer.toy_length.t_max;
    j["trainer"]        = t;
    nlohmann::ordered_json ds;
    ds["items"]         = c.dataset.items ? nlohmann::ordered_json(c.dataset.items->string()) : nlohmann::ordered_json(nullptr);
    ds["root"]          = c.dataset.root.string();
    ds["qpt_threshold"] = c.dataset.qpt_threshold;
    j["dataset"]        = ds;
    return j;
}

} // namespace auralrl
