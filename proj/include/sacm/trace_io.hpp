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

#include "sacm/confidence.hpp"
#include "sacm/core_state.hpp"
#include "sacm/error.hpp"
#include "sacm/modulation.hpp"
#include "sacm/scheduler.hpp"
#include "sacm/types.hpp"

#include <json.hpp>

#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

// Trace files are line-delimited JSON: one flat header object carrying the
// run configuration, then one object per step with the fields
//   step, masked, progress, candidates, conf_base, conf_mod, selected, tokens.
// Step floats use 9 significant digits; SUPPRESSED scores are written as null.

namespace sacm {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kTraceFormat = "sacm-trace/1";

/// %.9g, the fixed precision for per-step floats.
inline std::string format_float9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

namespace detail {

template <typename T, typename F>
void append_list(std::string& out, const std::vector<T>& xs, F&& fmt) {
    out += '[';
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (k) {
            out += ',';
        }
        out += fmt(xs[k]);
    }
    out += ']';
}

inline std::string format_score(const Score& s) { return s.is_suppressed() ? "null" : format_float9(s.value()); }

inline std::vector<std::uint32_t> token_ints(const std::vector<TokenId>& ts) {
    std::vector<std::uint32_t> out;
    out.reserve(ts.size());
    for (auto t : ts) {
        out.push_back(to_int(t));
    }
    return out;
}

inline std::vector<TokenId> tokens_from(const nlohmann::json& j) {
    std::vector<TokenId> out;
    for (const auto& v : j) {
        out.push_back(token(v.get<std::uint32_t>()));
    }
    return out;
}

} // namespace detail

inline std::string format_step_line(const StepRecord& r) {
    std::string out = "{\"step\":" + std::to_string(r.step) + ",\"masked\":" + std::to_string(r.masked) +
                      ",\"progress\":" + format_float9(r.progress) + ",\"candidates\":";
    detail::append_list(out, r.candidates, [](Position p) { return std::to_string(p); });
    out += ",\"conf_base\":";
    detail::append_list(out, r.conf_base, detail::format_score);
    out += ",\"conf_mod\":";
    detail::append_list(out, r.conf_mod, detail::format_score);
    out += ",\"selected\":";
    detail::append_list(out, r.selected, [](Position p) { return std::to_string(p); });
    out += ",\"tokens\":";
    detail::append_list(out, r.tokens, [](TokenId t) { return std::to_string(to_int(t)); });
    out += '}';
    return out;
}

/// Flat key-value form of a DecodeConfig.
inline ordered_json config_to_json(const DecodeConfig& c) {
    ordered_json j;
    j["length"] = c.length;
    j["steps"] = c.steps;
    j["strategy"] = std::string(to_string(c.strategy));
    j["mode"] = std::string(to_string(c.mode));
    j["block_size"] = c.block_size;
    j["anchor_tokens"] = detail::token_ints(c.anchor.tokens);
    j["anchor_offset"] = c.anchor.offset_from_end;
    j["anchor_display"] = c.anchor.display;
    j["modulation"] = c.modulation.has_value();
    const auto m = c.modulation.value_or(ModulationParams{});
    j["kappa"] = m.kappa;
    j["beta"] = m.beta;
    j["gamma"] = m.gamma;
    j["progress_dependent"] = m.progress_dependent;
    j["eot_suppression"] = c.eot_suppression;
    j["eot_hard_ban"] = c.eot_hard_ban;
    j["tie_break"] = std::string(to_string(c.tie_break));
    j["seed"] = c.seed;
    j["top_k"] = c.top_k;
    j["prompt"] = detail::token_ints(c.prompt);
    return j;
}

namespace detail {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return fallback;
    }
    return it->get<T>();
}

} // namespace detail

/// Reads the keys written by config_to_json; absent keys keep their defaults.
/// Unknown keys are ignored so the same object can carry model fields.
inline DecodeConfig config_from_json(const nlohmann::json& j, DecodeConfig c = {}) {
    try {
        c.length = detail::get_or<std::size_t>(j, "length", c.length);
        c.steps = detail::get_or<std::size_t>(j, "steps", c.steps);
        if (j.contains("strategy")) {
            const auto s = j.at("strategy").get<std::string>();
            auto parsed = parse_strategy(s);
            if (!parsed) {
                throw ConfigError("unknown strategy '" + s + "'");
            }
            c.strategy = *parsed;
        }
        if (j.contains("mode")) {
            const auto m = j.at("mode").get<std::string>();
            if (m == "fully_non_ar") {
                c.mode = DecodeMode::fully_non_ar;
            } else if (m == "semi_ar") {
                c.mode = DecodeMode::semi_ar;
            } else {
                throw ConfigError("unknown mode '" + m + "'");
            }
        }
        c.block_size = detail::get_or<std::size_t>(j, "block_size", c.block_size);
        if (j.contains("anchor_tokens")) {
            c.anchor.tokens = detail::tokens_from(j.at("anchor_tokens"));
        }
        c.anchor.offset_from_end = detail::get_or<std::size_t>(j, "anchor_offset", c.anchor.offset_from_end);
        c.anchor.display = detail::get_or<std::string>(j, "anchor_display", c.anchor.display);
        const bool mod_on = detail::get_or<bool>(j, "modulation", c.modulation.has_value());
        if (mod_on) {
            auto m = c.modulation.value_or(ModulationParams{});
            m.kappa = detail::get_or<double>(j, "kappa", m.kappa);
            m.beta = detail::get_or<double>(j, "beta", m.beta);
            m.gamma = detail::get_or<double>(j, "gamma", m.gamma);
            m.progress_dependent = detail::get_or<bool>(j, "progress_dependent", m.progress_dependent);
            c.modulation = m;
        } else {
            c.modulation.reset();
        }
        c.eot_suppression = detail::get_or<bool>(j, "eot_suppression", c.eot_suppression);
        c.eot_hard_ban = detail::get_or<bool>(j, "eot_hard_ban", c.eot_hard_ban);
        if (j.contains("tie_break")) {
            const auto t = j.at("tie_break").get<std::string>();
            if (t == "lowest_index") {
                c.tie_break = TieBreak::lowest_index;
            } else if (t == "random") {
                c.tie_break = TieBreak::random;
            } else {
                throw ConfigError("unknown tie_break '" + t + "'");
            }
        }
        c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed);
        c.top_k = detail::get_or<std::size_t>(j, "top_k", c.top_k);
        if (j.contains("prompt")) {
            c.prompt = detail::tokens_from(j.at("prompt"));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    return c;
}

/// Header object: format tag, decode config, vocabulary, model identity, and
/// any backend-specific fields (model_fields is merged in verbatim).
inline ordered_json trace_header(const DecodeTrace& trace, const ordered_json& model_fields = ordered_json::object()) {
    ordered_json h;
    h["format"] = kTraceFormat;
    const auto config = config_to_json(trace.config);
    for (auto& [k, v] : config.items()) {
        h[k] = v;
    }
    h["vocab_size"] = trace.vocab.size;
    h["mask_id"] = to_int(trace.vocab.mask_id);
    h["eot_id"] = to_int(trace.vocab.eot_id);
    h["model"] = trace.model_identity;
    for (auto& [k, v] : model_fields.items()) {
        h[k] = v;
    }
    return h;
}

inline void write_trace(std::ostream& out, const DecodeTrace& trace,
                        const ordered_json& model_fields = ordered_json::object()) {
    out << trace_header(trace, model_fields).dump() << '\n';
    for (const auto& s : trace.steps) {
        out << format_step_line(s) << '\n';
    }
}

inline std::string trace_to_string(const DecodeTrace& trace, const ordered_json& model_fields = ordered_json::object()) {
    std::ostringstream os;
    write_trace(os, trace, model_fields);
    return os.str();
}

struct TraceFile {
    nlohmann::json header;
    DecodeTrace trace;
};

namespace detail {

inline std::vector<Score> scores_from(const nlohmann::json& j) {
    std::vector<Score> out;
    for (const auto& v : j) {
        out.push_back(v.is_null() ? Score::suppressed() : Score(v.get<double>()));
    }
    return out;
}

[[noreturn]] inline void bad_line(const std::string& source, std::size_t line, const std::string& why) {
    throw IoError(source + ":" + std::to_string(line) + ": " + why);
}

} // namespace detail

/// Parses and checks a trace. Errors name the source and 1-based line number.
inline TraceFile read_trace(std::istream& in, const std::string& source = "<trace>") {
    TraceFile tf;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        detail::bad_line(source, 1, "empty trace file");
    }
    ++line_no;
    try {
        tf.header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        detail::bad_line(source, line_no, std::string("malformed header: ") + e.what());
    }
    if (!tf.header.is_object() || tf.header.value("format", "") != kTraceFormat) {
        detail::bad_line(source, line_no, "not a sacm trace header");
    }
    auto& trace = tf.trace;
    try {
        trace.config = config_from_json(tf.header);
        trace.vocab.size = tf.header.at("vocab_size").get<std::uint32_t>();
        trace.vocab.mask_id = token(tf.header.at("mask_id").get<std::uint32_t>());
        trace.vocab.eot_id = token(tf.header.at("eot_id").get<std::uint32_t>());
        trace.model_identity = tf.header.value("model", "");
        trace.vocab.validate();
        trace.config.validate();
        trace.anchor_positions = trace.config.anchor.positions(trace.config.length);
    } catch (const Error& e) {
        detail::bad_line(source, line_no, std::string("invalid header: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
        detail::bad_line(source, line_no, std::string("invalid header: ") + e.what());
    }

    const std::size_t length = trace.config.length;
    std::vector<bool> decided(length, false);
    for (auto a : trace.anchor_positions) {
        decided[a] = true;
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        StepRecord r;
        try {
            const auto j = nlohmann::json::parse(line);
            r.step = j.at("step").get<int>();
            r.masked = j.at("masked").get<std::size_t>();
            r.progress = j.at("progress").get<double>();
            r.candidates = j.at("candidates").get<std::vector<Position>>();
            r.conf_base = detail::scores_from(j.at("conf_base"));
            r.conf_mod = detail::scores_from(j.at("conf_mod"));
            r.selected = j.at("selected").get<std::vector<Position>>();
            r.tokens = detail::tokens_from(j.at("tokens"));
        } catch (const nlohmann::json::exception& e) {
            detail::bad_line(source, line_no, std::string("malformed step: ") + e.what());
        }
        if (r.step != static_cast<int>(trace.steps.size())) {
            detail::bad_line(source, line_no, "expected step " + std::to_string(trace.steps.size()));
        }
        if (r.conf_base.size() != r.candidates.size() || r.conf_mod.size() != r.candidates.size() ||
            r.tokens.size() != r.selected.size()) {
            detail::bad_line(source, line_no, "step arrays have mismatched lengths");
        }
        for (auto i : r.selected) {
            if (i >= length || decided[i]) {
                detail::bad_line(source, line_no, "selected position " + std::to_string(i) + " is not masked");
            }
            decided[i] = true;
        }
        trace.steps.push_back(std::move(r));
    }
    if (trace.steps.size() != trace.config.steps) {
        detail::bad_line(source, line_no + 1,
                         "trace truncated: expected " + std::to_string(trace.config.steps) + " steps, found " +
                             std::to_string(trace.steps.size()));
    }
    return tf;
}

inline TraceFile read_trace_string(const std::string& text, const std::string& source = "<trace>") {
    std::istringstream is(text);
    return read_trace(is, source);
}

} // namespace sacm
