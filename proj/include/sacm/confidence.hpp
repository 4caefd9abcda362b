/*
 * Copyright (c) 2026, The sacm Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "sacm/denoiser.hpp"
#include "sacm/error.hpp"
#include "sacm/hash.hpp"
#include "sacm/types.hpp"

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sacm {

enum class Strategy { top_probability, top_margin, random };

inline std::string_view to_string(Strategy s) noexcept {
    switch (s) {
    case Strategy::top_probability:
        return "top_probability";
    case Strategy::top_margin:
        return "top_margin";
    case Strategy::random:
        return "random";
    }
    return "unknown";
}

/// Accepts the canonical tags and the short CLI spellings (top-prob, top-margin).
inline std::optional<Strategy> parse_strategy(std::string_view s) noexcept {
    if (s == "top_probability" || s == "top-probability" || s == "top-prob" || s == "top_prob") {
        return Strategy::top_probability;
    }
    if (s == "top_margin" || s == "top-margin") {
        return Strategy::top_margin;
    }
    if (s == "random") {
        return Strategy::random;
    }
    return std::nullopt;
}

/// A confidence score, or SUPPRESSED which orders below every finite value.
class Score {
public:
    constexpr Score() = default;
    constexpr explicit Score(double value) : value_(value) {}

    static constexpr Score suppressed() {
        Score s;
        s.suppressed_ = true;
        return s;
    }

    constexpr bool is_suppressed() const noexcept { return suppressed_; }
    /// Only meaningful when !is_suppressed().
    constexpr double value() const noexcept { return value_; }

    friend constexpr bool operator==(const Score& a, const Score& b) noexcept {
        if (a.suppressed_ || b.suppressed_) {
            return a.suppressed_ == b.suppressed_;
        }
        return a.value_ == b.value_;
    }

    friend constexpr std::partial_ordering operator<=>(const Score& a, const Score& b) noexcept {
        if (a.suppressed_ || b.suppressed_) {
            return static_cast<int>(!a.suppressed_) <=> static_cast<int>(!b.suppressed_);
        }
        return a.value_ <=> b.value_;
    }

private:
    double value_ = 0.0;
    bool suppressed_ = false;
};

/// Scores for the masked positions, both lists ascending by position.
struct ConfidenceVector {
    Strategy strategy = Strategy::top_probability;
    std::vector<Position> positions;
    std::vector<Score> scores;

    std::size_t size() const noexcept { return positions.size(); }

    friend bool operator==(const ConfidenceVector&, const ConfidenceVector&) = default;
};

inline ConfidenceVector top_probability(const DenoiserResponse& resp) {
    ConfidenceVector out{Strategy::top_probability, {}, {}};
    out.positions.reserve(resp.predictions.size());
    out.scores.reserve(resp.predictions.size());
    for (const auto& p : resp.predictions) {
        if (p.top.empty()) {
            throw ContractError("position " + std::to_string(p.position) + " has no predictions");
        }
        out.positions.push_back(p.position);
        out.scores.emplace_back(p.top[0].prob);
    }
    return out;
}

inline ConfidenceVector top_margin(const DenoiserResponse& resp) {
    ConfidenceVector out{Strategy::top_margin, {}, {}};
    out.positions.reserve(resp.predictions.size());
    out.scores.reserve(resp.predictions.size());
    for (const auto& p : resp.predictions) {
        if (p.top.size() < 2) {
            throw ContractError("top-margin needs two predictions at position " + std::to_string(p.position));
        }
        out.positions.push_back(p.position);
        out.scores.emplace_back(p.top[0].prob - p.top[1].prob);
    }
    return out;
}

/// Counter-based uniform score in [0,1) keyed by (seed, step, position).
inline double random_score(std::uint64_t seed, std::uint64_t step, Position position) noexcept {
    return to_unit_interval(counter_hash(seed, step, position));
}

inline ConfidenceVector random_scores(std::span<const Position> masked, std::uint64_t seed, std::uint64_t step) {
    ConfidenceVector out{Strategy::random, {masked.begin(), masked.end()}, {}};
    out.scores.reserve(masked.size());
    for (auto i : masked) {
        out.scores.emplace_back(random_score(seed, step, i));
    }
    return out;
}

/// Base confidence for one step under the given strategy.
inline ConfidenceVector base_confidence(Strategy strategy, const DenoiserResponse& resp, std::uint64_t seed,
                                        std::uint64_t step) {
    switch (strategy) {
    case Strategy::top_probability:
        return top_probability(resp);
    case Strategy::top_margin:
        return top_margin(resp);
    case Strategy::random: {
        std::vector<Position> masked;
        masked.reserve(resp.predictions.size());
        for (const auto& p : resp.predictions) {
            masked.push_back(p.position);
        }
        return random_scores(masked, seed, step);
    }
    }
    throw ContractError("unknown strategy");
}

/// Orders positions whose argmax token is EOT below all others. Tokens are untouched.
inline ConfidenceVector eot_suppress(ConfidenceVector conf, const DenoiserResponse& resp, TokenId eot) {
    if (conf.positions.size() != resp.predictions.size()) {
        throw ContractError("eot_suppress: confidence and response cover different positions");
    }
    for (std::size_t k = 0; k < conf.positions.size(); ++k) {
        const auto& pred = resp.predictions[k];
        if (pred.position != conf.positions[k]) {
            throw ContractError("eot_suppress: confidence and response cover different positions");
        }
        if (!pred.top.empty() && pred.top.front().token == eot) {
            conf.scores[k] = Score::suppressed();
        }
    }
    return conf;
}

} // namespace sacm
