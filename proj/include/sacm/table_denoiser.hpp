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
#include "sacm/wire.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

// Prediction table files, shared with the stub model server:
//   line 1:  {"format":"sacm-table/1","vocab_size":V,"mask_id":M,"eot_id":E}
//   line 2+: {"prompt":[...],"slots":[int|null...],"top_k":K,"predictions":{...}}
// An entry answers the request whose (prompt, slots, top_k) match exactly.

namespace sacm {

inline constexpr const char* kTableFormat = "sacm-table/1";

/// Lookup key for a request: its wire form without the id.
inline std::string table_key(const DenoiserRequest& r) {
    nlohmann::ordered_json j = wire::request_to_json(0, r);
    j.erase("id");
    return j.dump();
}

class PredictionTable {
public:
    PredictionTable() = default;
    explicit PredictionTable(Vocabulary vocab) : vocab_(std::move(vocab)) {}

    const Vocabulary& vocabulary() const noexcept { return vocab_; }
    std::size_t size() const noexcept { return entries_.size(); }

    void add(const DenoiserRequest& request, DenoiserResponse response) {
        const auto key = table_key(request);
        if (entries_.find(key) == entries_.end()) {
            order_.push_back(key);
        }
        entries_[key] = {request, std::move(response)};
    }

    const DenoiserResponse* find(const DenoiserRequest& request) const {
        auto it = entries_.find(table_key(request));
        return it == entries_.end() ? nullptr : &it->second.second;
    }

    void write(std::ostream& out) const {
        nlohmann::ordered_json head;
        head["format"] = kTableFormat;
        head["vocab_size"] = vocab_.size;
        head["mask_id"] = to_int(vocab_.mask_id);
        head["eot_id"] = to_int(vocab_.eot_id);
        out << head.dump() << '\n';
        for (const auto& key : order_) {
            const auto& [req, resp] = entries_.at(key);
            nlohmann::ordered_json j = wire::request_to_json(0, req);
            j.erase("id");
            j["predictions"] = wire::predictions_to_json(resp);
            out << j.dump() << '\n';
        }
    }

    static PredictionTable read(std::istream& in, const std::string& source = "<table>") {
        std::string line;
        std::size_t line_no = 0;
        auto fail = [&](const std::string& why) -> IoError {
            return IoError(source + ":" + std::to_string(line_no) + ": " + why);
        };
        if (!std::getline(in, line)) {
            throw IoError(source + ": empty table file");
        }
        ++line_no;
        PredictionTable table;
        try {
            const auto head = nlohmann::json::parse(line);
            if (head.value("format", "") != kTableFormat) {
                throw fail("not a sacm prediction table");
            }
            table.vocab_.size = head.at("vocab_size").get<std::uint32_t>();
            table.vocab_.mask_id = token(head.at("mask_id").get<std::uint32_t>());
            table.vocab_.eot_id = token(head.at("eot_id").get<std::uint32_t>());
            table.vocab_.validate();
        } catch (const nlohmann::json::exception& e) {
            throw fail(std::string("malformed table header: ") + e.what());
        } catch (const ConfigError& e) {
            throw fail(e.what());
        }
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) {
                continue;
            }
            try {
                const auto j = nlohmann::json::parse(line);
                DenoiserRequest req;
                for (const auto& t : j.at("prompt")) {
                    req.prompt_tokens.push_back(token(t.get<std::uint32_t>()));
                }
                req.response_slots = wire::slots_from_json(j.at("slots"));
                req.top_k = j.at("top_k").get<std::size_t>();
                table.add(req, wire::predictions_from_json(j.at("predictions")));
            } catch (const nlohmann::json::exception& e) {
                throw fail(std::string("malformed table entry: ") + e.what());
            } catch (const DenoiserError& e) {
                throw fail(e.what());
            }
        }
        return table;
    }

    static PredictionTable load(const std::string& path) {
        std::ifstream in(path);
        if (!in) {
            throw IoError("cannot open prediction table '" + path + "'");
        }
        return read(in, path);
    }

private:
    Vocabulary vocab_;
    std::map<std::string, std::pair<DenoiserRequest, DenoiserResponse>> entries_;
    std::vector<std::string> order_;
};

/// Replays a prediction table in-process.
class TableDenoiser final : public Denoiser {
public:
    explicit TableDenoiser(PredictionTable table) : table_(std::move(table)) {}

    DenoiserResponse predict(const DenoiserRequest& request) override {
        const auto* hit = table_.find(request);
        if (!hit) {
            throw DenoiserError("unknown_state: no table entry for this request");
        }
        return *hit;
    }
    const Vocabulary& vocabulary() const override { return table_.vocabulary(); }
    std::string identity() const override { return "table"; }

private:
    PredictionTable table_;
};

/// Forwards to another denoiser and records every exchange into a table.
class RecordingDenoiser final : public Denoiser {
public:
    explicit RecordingDenoiser(Denoiser& inner) : inner_(inner), table_(inner.vocabulary()) {}

    DenoiserResponse predict(const DenoiserRequest& request) override {
        auto resp = inner_.predict(request);
        table_.add(request, resp);
        return resp;
    }
    const Vocabulary& vocabulary() const override { return inner_.vocabulary(); }
    std::string identity() const override { return inner_.identity(); }
    const PredictionTable& table() const noexcept { return table_; }

private:
    Denoiser& inner_;
    PredictionTable table_;
};

} // namespace sacm
