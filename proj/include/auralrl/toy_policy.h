#pragma once

#include <json.hpp>

#include <cstddef>
#include <vector>

namespace auralrl {

// Tabular softmax policy: one row of logits per context bucket.
class toy_policy {
  public:
    toy_policy() = default;
    toy_policy(size_t buckets, size_t vocab_size, double temperature = 1.0);

    size_t buckets() const noexcept { return buckets_; }
    size_t vocab_size() const noexcept { return vocab_; }
    double temperature() const noexcept { return temperature_; }

    double &       logit(size_t bucket, size_t token) { return logits_[bucket * vocab_ + token]; }
    double         logit(size_t bucket, size_t token) const { return logits_[bucket * vocab_ + token]; }
    std::vector<double> &       params() noexcept { return logits_; }
    const std::vector<double> & params() const noexcept { return logits_; }

    // softmax(logits / temperature) for one bucket.
    std::vector<double> probs(size_t bucket) const;
    std::vector<double> log_probs(size_t bucket) const;

    nlohmann::ordered_json to_json() const;
    static toy_policy      from_json(const nlohmann::ordered_json & j);

    bool operator==(const toy_policy &) const = default;

  private:
    size_t              buckets_     = 0;
    size_t              vocab_       = 0;
    double              temperature_ = 1.0;
    std::vector<double> logits_;
};

} // namespace auralrl
