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
#include "sacm/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

// Denoiser wire protocol: one JSON object per line, UTF-8.
//   request:  {"id":N,"prompt":[int...],"slots":[int|null...],"top_k":K}
//   response: {"id":N,"predictions":{"<pos>":[[token,prob],...],...}}
//   error:    {"id":N,"error":"<reason>"}   (id -1 for unparseable requests)
// Probabilities are written in shortest round-trip form (at least 9
// significant digits); ties are broken by lowest token id on the server.

namespace sacm::wire {

inline nlohmann::json slots_to_json(const std::vector<Slot>& slots) {
    auto arr = nlohmann::json::array();
    for (const auto& s : slots) {
        if (s) {
            arr.push_back(to_int(*s));
        } else {
            arr.push_back(nullptr);
        }
    }
    return arr;
}

inline std::vector<Slot> slots_from_json(const nlohmann::json& j) {
    std::vector<Slot> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (v.is_null()) {
            out.emplace_back(std::nullopt);
        } else {
            out.emplace_back(token(v.get<std::uint32_t>()));
        }
    }
    return out;
}

inline nlohmann::ordered_json request_to_json(std::int64_t id, const DenoiserRequest& r) {
    nlohmann::ordered_json j;
    j["id"] = id;
    auto prompt = nlohmann::json::array();
    for (auto t : r.prompt_tokens) {
        prompt.push_back(to_int(t));
    }
    j["prompt"] = std::move(prompt);
    j["slots"] = slots_to_json(r.response_slots);
    j["top_k"] = r.top_k;
    return j;
}

inline std::string encode_request(std::int64_t id, const DenoiserRequest& r) { return request_to_json(id, r).dump(); }

struct DecodedRequest {
    std::int64_t id = -1;
    DenoiserRequest request;
};

inline DecodedRequest decode_request(const std::string& line) {
    DecodedRequest out;
    try {
        const auto j = nlohmann::json::parse(line);
        out.id = j.at("id").get<std::int64_t>();
        for (const auto& t : j.at("prompt")) {
            out.request.prompt_tokens.push_back(token(t.get<std::uint32_t>()));
        }
        out.request.response_slots = slots_from_json(j.at("slots"));
        out.request.top_k = j.at("top_k").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DenoiserError(std::string("malformed wire request: ") + e.what());
    }
    return out;
}

inline nlohmann::ordered_json predictions_to_json(const DenoiserResponse& r) {
    nlohmann::ordered_json preds = nlohmann::ordered_json::object();
    for (const auto& p : r.predictions) {
        auto pairs = nlohmann::json::array();
        for (const auto& tp : p.top) {
            pairs.push_back({to_int(tp.token), tp.prob});
        }
        preds[std::to_string(p.position)] = std::move(pairs);
    }
    return preds;
}

/// Parses a predictions object. Positions come back in ascending order
/// regardless of key order on the wire.
inline DenoiserResponse predictions_from_json(const nlohmann::json& preds) {
    DenoiserResponse out;
    if (!preds.is_object()) {
        throw DenoiserError("predictions must be an object");
    }
    for (const auto& [key, pairs] : preds.items()) {
        PositionPrediction pp;
        std::size_t used = 0;
        unsigned long long pos = 0;
        try {
            pos = std::stoull(key, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != key.size() || key.empty()) {
            throw DenoiserError("prediction key '" + key + "' is not a position");
        }
        pp.position = static_cast<Position>(pos);
        for (const auto& pair : pairs) {
            if (!pair.is_array() || pair.size() != 2) {
                throw DenoiserError("prediction at position " + key + " is not a [token, probability] pair");
            }
            pp.top.push_back({token(pair[0].get<std::uint32_t>()), pair[1].get<double>()});
        }
        out.predictions.push_back(std::move(pp));
    }
    std::sort(out.predictions.begin(), out.predictions.end(),
              [](const auto& a, const auto& b) { return a.position < b.position; });
    return out;
}

inline std::string encode_response(std::int64_t id, const DenoiserResponse& r) {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["predictions"] = predictions_to_json(r);
    return j.dump();
}

inline std::string encode_error(std::int64_t id, const std::string& reason) {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["error"] = reason;
    return j.dump();
}

/// Parses a response line for the given request id. Server-side errors and
/// id mismatches become DenoiserError.
inline DenoiserResponse decode_response(const std::string& line, std::int64_t expected_id) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw DenoiserError(std::string("malformed wire response: ") + e.what());
    }
    try {
        if (!j.is_object() || !j.contains("id")) {
            throw DenoiserError("wire response without id");
        }
        const auto id = j.at("id").get<std::int64_t>();
        if (j.contains("error")) {
            throw DenoiserError("server error for request " + std::to_string(id) + ": " +
                                j.at("error").get<std::string>());
        }
        if (id != expected_id) {
            throw DenoiserError("wire response id " + std::to_string(id) + " does not match request id " +
                                std::to_string(expected_id));
        }
        return predictions_from_json(j.at("predictions"));
    } catch (const nlohmann::json::exception& e) {
        throw DenoiserError(std::string("malformed wire response: ") + e.what());
    }
}

} // namespace sacm::wire
