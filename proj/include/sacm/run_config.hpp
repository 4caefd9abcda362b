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
#include "sacm/remote_client.hpp"
#include "sacm/scheduler.hpp"
#include "sacm/synthetic_denoiser.hpp"
#include "sacm/table_denoiser.hpp"
#include "sacm/trace_io.hpp"
#include "sacm/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace sacm {

namespace detail {

inline nlohmann::json load_json_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) {
        throw IoError(std::string("cannot open ") + what + " '" + path + "'");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed ") + what + " '" + path + "': " + e.what());
    }
}

} // namespace detail

/// Reads a synthetic model description. The target is either given verbatim
/// ("target") or generated from "length", "eot_suffix" and "content_vocab".
/// Keys take an optional prefix so the same reader parses trace headers.
inline SyntheticModelConfig synthetic_from_json(const nlohmann::json& j, const std::string& prefix = "") {
    auto key = [&](const char* k) { return prefix + k; };
    auto has = [&](const char* k) { return j.contains(key(k)); };
    SyntheticModelConfig c;
    try {
        c.vocab.size = j.at("vocab_size").get<std::uint32_t>();
        c.vocab.mask_id = token(j.at("mask_id").get<std::uint32_t>());
        c.vocab.eot_id = token(j.at("eot_id").get<std::uint32_t>());
        if (has("target")) {
            c.target = detail::tokens_from(j.at(key("target")));
        } else {
            const auto length = j.at(key("length")).get<std::size_t>();
            const auto suffix = j.at(key("eot_suffix")).get<std::size_t>();
            const auto content = detail::tokens_from(j.at(key("content_vocab")));
            const auto seed = j.value(key("seed"), std::uint64_t{0});
            if (suffix > length || (suffix < length && content.empty())) {
                throw ConfigError("synthetic target generator needs eot_suffix <= length and a content vocabulary");
            }
            for (std::size_t i = 0; i < length; ++i) {
                c.target.push_back(i + suffix < length ? content[counter_hash(seed, i, 0xC0DEULL) % content.size()]
                                                       : c.vocab.eot_id);
            }
        }
        c.context_window = j.value(key("context_window"), c.context_window);
        c.base_conf = j.value(key("base_conf"), c.base_conf);
        c.context_gain = j.value(key("context_gain"), c.context_gain);
        c.eot_boost = j.value(key("eot_boost"), c.eot_boost);
        c.anchor_pull = j.value(key("anchor_pull"), c.anchor_pull);
        if (has("noise_vocab")) {
            c.noise_vocab = detail::tokens_from(j.at(key("noise_vocab")));
        }
        if (has("anchor_vocab")) {
            c.anchor_vocab = detail::tokens_from(j.at(key("anchor_vocab")));
        }
        if (has("fill_vocab")) {
            c.fill_vocab = detail::tokens_from(j.at(key("fill_vocab")));
        }
        c.seed = j.value(key("seed"), c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad synthetic model config: ") + e.what());
    }
    c.validate();
    return c;
}

/// Flat header fields for a synthetic model (vocabulary is written separately).
inline ordered_json synthetic_to_json(const SyntheticModelConfig& c, const std::string& prefix = "synth_") {
    ordered_json j;
    j[prefix + "target"] = detail::token_ints(c.target);
    j[prefix + "context_window"] = c.context_window;
    j[prefix + "base_conf"] = c.base_conf;
    j[prefix + "context_gain"] = c.context_gain;
    j[prefix + "eot_boost"] = c.eot_boost;
    j[prefix + "anchor_pull"] = c.anchor_pull;
    j[prefix + "noise_vocab"] = detail::token_ints(c.noise_vocab);
    j[prefix + "anchor_vocab"] = detail::token_ints(c.anchor_vocab);
    j[prefix + "fill_vocab"] = detail::token_ints(c.fill_vocab);
    j[prefix + "seed"] = c.seed;
    return j;
}

enum class Backend { synthetic, table, remote };

struct ModelSpec {
    Backend backend = Backend::synthetic;
    std::string location; // config path, table path or host:port
    std::optional<SyntheticModelConfig> synthetic;
    std::optional<Vocabulary> vocab; // remote backend only

    /// Parses "synthetic:<cfg.json>", "table:<file>" or "remote:<host:port>".
    static ModelSpec parse(const std::string& text) {
        const auto colon = text.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("model '" + text + "' must be synthetic:<file>, table:<file> or remote:<host:port>");
        }
        const auto kind = text.substr(0, colon);
        ModelSpec m;
        m.location = text.substr(colon + 1);
        if (kind == "synthetic") {
            m.backend = Backend::synthetic;
        } else if (kind == "table") {
            m.backend = Backend::table;
        } else if (kind == "remote") {
            m.backend = Backend::remote;
        } else {
            throw ConfigError("unknown model backend '" + kind + "'");
        }
        if (m.location.empty()) {
            throw ConfigError("model '" + text + "' has no location");
        }
        return m;
    }

    /// Loads file-backed configuration. Synthetic configs are read once.
    void load() {
        if (backend == Backend::synthetic && !synthetic) {
            synthetic = synthetic_from_json(detail::load_json_file(location, "synthetic model config"));
        }
    }
};

inline std::unique_ptr<Denoiser> make_denoiser(const ModelSpec& spec) {
    switch (spec.backend) {
    case Backend::synthetic:
        if (!spec.synthetic) {
            throw ConfigError("synthetic model config not loaded");
        }
        return std::make_unique<SyntheticDenoiser>(*spec.synthetic);
    case Backend::table:
        return std::make_unique<TableDenoiser>(PredictionTable::load(spec.location));
    case Backend::remote:
        if (!spec.vocab) {
            throw ConfigError("remote backend needs vocab_size, mask_id and eot_id");
        }
        return std::make_unique<RemoteDenoiser>(resolve_endpoint(spec.location), *spec.vocab);
    }
    throw ConfigError("unknown backend");
}

/// Backend-specific header fields. Synthetic models are embedded in full so a
/// trace header alone reproduces the run.
inline ordered_json model_fields(const ModelSpec& spec) {
    ordered_json j;
    switch (spec.backend) {
    case Backend::synthetic: {
        auto s = synthetic_to_json(*spec.synthetic);
        j["model_digest"] = std::to_string(fnv1a(s.dump()));
        for (auto& [k, v] : s.items()) {
            j[k] = v;
        }
        break;
    }
    case Backend::table:
        j["table_path"] = spec.location;
        break;
    case Backend::remote:
        j["remote_endpoint"] = spec.location;
        break;
    }
    return j;
}

struct RunConfig {
    DecodeConfig decode;
    ModelSpec model;
    std::string trace_path;
    std::string record_table;
    std::size_t repeat = 1;
    std::vector<std::uint64_t> seeds;

    /// Decode seeds for the repeats: the explicit list, or seed, seed+1, ...
    std::vector<std::uint64_t> run_seeds() const {
        if (!seeds.empty()) {
            return seeds;
        }
        std::vector<std::uint64_t> out;
        for (std::size_t r = 0; r < std::max<std::size_t>(repeat, 1); ++r) {
            out.push_back(decode.seed + r);
        }
        return out;
    }
};

/// Rebuilds the run configuration from a trace header. Only synthetic runs
/// carry their full model; table and remote runs point at their source.
inline RunConfig run_config_from_header(const nlohmann::json& header) {
    RunConfig rc;
    rc.decode = config_from_json(header);
    const auto model = header.value("model", std::string("synthetic"));
    Vocabulary vocab;
    try {
        vocab.size = header.at("vocab_size").get<std::uint32_t>();
        vocab.mask_id = token(header.at("mask_id").get<std::uint32_t>());
        vocab.eot_id = token(header.at("eot_id").get<std::uint32_t>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("trace header lacks vocabulary: ") + e.what());
    }
    if (model == "synthetic") {
        rc.model.backend = Backend::synthetic;
        rc.model.location = "<trace header>";
        rc.model.synthetic = synthetic_from_json(header, "synth_");
    } else if (model == "table") {
        rc.model.backend = Backend::table;
        rc.model.location = header.at("table_path").get<std::string>();
    } else if (model == "remote") {
        rc.model.backend = Backend::remote;
        rc.model.location = header.at("remote_endpoint").get<std::string>();
        rc.model.vocab = vocab;
    } else {
        throw ConfigError("unknown model '" + model + "' in trace header");
    }
    return rc;
}

/// Decodes once and serializes the trace with full model fields.
inline std::string run_to_trace_text(const RunConfig& rc) {
    auto denoiser = make_denoiser(rc.model);
    const auto result = decode(rc.decode, *denoiser);
    return trace_to_string(result.trace, model_fields(rc.model));
}

} // namespace sacm
