#pragma once

#include "auralrl/decode.h"
#include "auralrl/reward.h"
#include "auralrl/toy_env.h"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace auralrl {

struct dataset_config {
    std::optional<std::filesystem::path> items;
    std::filesystem::path                root          = ".";
    double                               qpt_threshold = 0.85;
};

struct trainer_config {
    double   lr         = 1e-6; // full-scale learning rate
    double   toy_lr     = 0.3;  // used by train-toy
    double   kl_beta    = 0.1;
    size_t   group_size = 8;
    size_t   steps      = 2000;
    size_t   sft_steps  = 200;
    double   sft_lr     = 50;
    size_t   toy_max_tokens = 40;
    length_params toy_length{ 4, 24 };
};

struct app_config {
    reward_weights weights;
    length_params  length;
    decode_config  decode;
    trainer_config trainer;
    dataset_config dataset;

    void validate() const;

    // Overlays the trainer section onto toy-run settings.
    toy_train_config toy_config(uint64_t seed, size_t jobs) const;
};

app_config             config_from_json(const nlohmann::ordered_json & j);
app_config             load_config(const std::filesystem::path & path);
nlohmann::ordered_json config_to_json(const app_config & c);

} // namespace auralrl
