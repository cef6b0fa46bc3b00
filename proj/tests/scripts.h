#pragma once

// Scripted mock models built from a confidence profile.

#include "auralrl/decode.h"

#include <string>
#include <vector>

namespace scripts {

// Step k emits "w<k % 7>" with probability conf[k]; the rest of the mass sits
// on PAUSE, so the sampled confidence is exactly conf[k].
inline auralrl::scripted_model from_confidences(const std::vector<double> & conf) {
    std::vector<auralrl::scripted_model::step> steps;
    for (size_t k = 0; k < conf.size(); ++k) {
        steps.push_back({ "w" + std::to_string(k % 7), conf[k], {} });
    }
    return auralrl::scripted_model(std::move(steps));
}

// Baseline confidence with two-token dips (window 2 mean hits `dip`) ending at
// each listed step.
inline std::vector<double> dips(size_t length, double base, double dip, const std::vector<size_t> & ends) {
    std::vector<double> c(length, base);
    for (size_t e : ends) {
        c[e - 1] = dip;
        c[e]     = dip;
    }
    return c;
}

} // namespace scripts
