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

#include "sacm/error.hpp"
#include "sacm/types.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace sacm {

struct DenoiserRequest {
    std::vector<TokenId> prompt_tokens;
    std::vector<Slot> response_slots;
    std::size_t top_k = 2;

    std::vector<Position> masked_positions() const {
        std::vector<Position> out;
        for (Position i = 0; i < response_slots.size(); ++i) {
            if (!response_slots[i]) {
                out.push_back(i);
            }
        }
        return out;
    }
};

struct TokenProb {
    TokenId token{};
    double prob = 0.0;

    friend bool operator==(const TokenProb&, const TokenProb&) = default;
};

struct PositionPrediction {
    Position position = 0;
    std::vector<TokenProb> top; // descending by prob; top.front() is the argmax

    TokenId argmax() const { return top.front().token; }

    friend bool operator==(const PositionPrediction&, const PositionPrediction&) = default;
};

/// Per-masked-position top-k predictions, ascending by position.
struct DenoiserResponse {
    std::vector<PositionPrediction> predictions;

    friend bool operator==(const DenoiserResponse&, const DenoiserResponse&) = default;
};

/// Slack on the per-position probability sum for values that crossed a text transport.
inline constexpr double kProbSumTolerance = 1e-6;

class Denoiser {
public:
    virtual ~Denoiser() = default;

    virtual DenoiserResponse predict(const DenoiserRequest& request) = 0;
    virtual const Vocabulary& vocabulary() const = 0;
    /// Short backend identity recorded in trace headers.
    virtual std::string identity() const = 0;
};

inline void validate_request(const DenoiserRequest& request) {
    if (request.top_k < 2) {
        throw ContractError("denoiser request top_k must be at least 2");
    }
    if (request.masked_positions().empty()) {
        throw ContractError("denoiser request has no masked slots");
    }
}

/// Checks coverage and the probability invariants. Throws DenoiserError
/// naming the offending positions.
inline void validate_response(const DenoiserRequest& request, const DenoiserResponse& response,
                              const Vocabulary& vocab) {
    const auto masked = request.masked_positions();
    std::vector<Position> got;
    got.reserve(response.predictions.size());
    for (const auto& p : response.predictions) {
        got.push_back(p.position);
    }
    if (got != masked) {
        std::string missing;
        std::string extra;
        std::size_t a = 0;
        std::size_t b = 0;
        while (a < masked.size() || b < got.size()) {
            if (b == got.size() || (a < masked.size() && masked[a] < got[b])) {
                missing += (missing.empty() ? "" : ",") + std::to_string(masked[a++]);
            } else if (a == masked.size() || got[b] < masked[a]) {
                extra += (extra.empty() ? "" : ",") + std::to_string(got[b++]);
            } else {
                ++a;
                ++b;
            }
        }
        std::string msg = "denoiser response does not cover the masked positions";
        if (!missing.empty()) {
            msg += "; missing: " + missing;
        }
        if (!extra.empty()) {
            msg += "; unexpected: " + extra;
        }
        if (missing.empty() && extra.empty()) {
            msg += "; positions out of order or duplicated";
        }
        throw DenoiserError(msg);
    }
    for (const auto& p : response.predictions) {
        const auto where = "position " + std::to_string(p.position) + ": ";
        if (p.top.size() != request.top_k) {
            throw DenoiserError(where + "expected " + std::to_string(request.top_k) + " pairs, got " +
                                std::to_string(p.top.size()));
        }
        double sum = 0.0;
        for (std::size_t k = 0; k < p.top.size(); ++k) {
            const auto& tp = p.top[k];
            if (!(tp.prob >= 0.0 && tp.prob <= 1.0)) {
                throw DenoiserError(where + "probability outside [0,1]");
            }
            if (!vocab.contains(tp.token) || tp.token == vocab.mask_id) {
                throw DenoiserError(where + "invalid token " + std::to_string(to_int(tp.token)));
            }
            if (k > 0 && p.top[k - 1].prob < tp.prob) {
                throw DenoiserError(where + "pairs not sorted by descending probability");
            }
            if (k > 0 && p.top[k - 1].prob == tp.prob && p.top[k - 1].token > tp.token) {
                throw DenoiserError(where + "equal probabilities not ordered by token id");
            }
            for (std::size_t j = 0; j < k; ++j) {
                if (p.top[j].token == tp.token) {
                    throw DenoiserError(where + "duplicate token " + std::to_string(to_int(tp.token)));
                }
            }
            sum += tp.prob;
        }
        if (sum > 1.0 + kProbSumTolerance) {
            throw DenoiserError(where + "probabilities sum above 1");
        }
    }
}

/// predict() with request and response validation around it.
inline DenoiserResponse predict_checked(Denoiser& denoiser, const DenoiserRequest& request) {
    validate_request(request);
    auto response = denoiser.predict(request);
    validate_response(request, response, denoiser.vocabulary());
    return response;
}

} // namespace sacm
