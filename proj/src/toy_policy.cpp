#include "auralrl/toy_policy.h"

#include "auralrl/error.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace auralrl {

toy_policy::toy_policy(size_t buckets, size_t vocab_size, double temperature)
    : buckets_(buckets), vocab_(vocab_size), temperature_(temperature), logits_(buckets * vocab_size, 0.0) {
    if (buckets == 0 || vocab_size == 0) {
        throw error(errc::invalid_argument, "toy_policy needs at least one bucket and one token");
    }
    if (!(temperature > 0.0)) {
        throw error(errc::invalid_argument, "toy_policy temperature must be positive");
    }
}

std::vector<double> toy_policy::log_probs(size_t bucket) const {
    std::vector<double> out(vocab_);
    double              max_z = -std::numeric_limits<double>::infinity();
    for (size_t v = 0; v < vocab_; ++v) {
        out[v] = logit(bucket, v) / temperature_;
        max_z  = std::max(max_z, out[v]);
    }
    double z = 0.0;
    for (double l : out) {
        z += std::exp(l - max_z);
    }
    const double lse = max_z + std::log(z);
    for (double & l : out) {
        l -= lse;
    }
    return out;
}

std::vector<double> toy_policy::probs(size_t bucket) const {
    auto out = log_probs(bucket);
    for (double & l : out) {
        l = std::exp(l);
    }
    return out;
}

nlohmann::ordered_json toy_policy::to_json() const {
    nlohmann::ordered_json j;
    j["buckets"]     = buckets_;
    j["vocab_size"]  = vocab_;
    j["temperature"] = temperature_;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (size_t b = 0; b < buckets_; ++b) {
        rows.push_back(std::vector<double>(logits_.begin() + static_cast<std::ptrdiff_t>(b * vocab_),
                                           logits_.begin() + static_cast<std::ptrdiff_t>((b + 1) * vocab_)));
    }
    j["logits"] = std::move(rows);
    return j;
}

toy_policy toy_policy::from_json(const nlohmann::ordered_json & j) {
    try {
        toy_policy p(j.at("buckets").get<size_t>(), j.at("vocab_size").get<size_t>(), j.value("temperature", 1.0));
        const auto & rows = j.at("logits");
        if (rows.size() != p.buckets_) {
            throw error(errc::shape_mismatch, "checkpoint has the wrong number of logit rows");
        }
        for (size_t b = 0; b < p.buckets_; ++b) {
            const auto row = rows[b].get<std::vector<double>>();
            if (row.size() != p.vocab_) {
                throw error(errc::shape_mismatch, "checkpoint logit row has the wrong width");
            }
            std::copy(row.begin(), row.end(), p.logits_.begin() + static_cast<std::ptrdiff_t>(b * p.vocab_));
        }
        return p;
    } catch (const nlohmann::json::exception & e) {
        throw error(errc::parse_error, std::string("malformed policy checkpoint: ") + e.what());
    }
}

} // namespace auralrl
