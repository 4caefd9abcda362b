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
#include "sacm/denoiser.hpp"
#include "sacm/error.hpp"
#include "sacm/hash.hpp"
#include "sacm/modulation.hpp"
#include "sacm/types.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sacm {

enum class DecodeMode { fully_non_ar, semi_ar };
enum class TieBreak { lowest_index, random };

inline std::string_view to_string(DecodeMode m) noexcept {
    return m == DecodeMode::fully_non_ar ? "fully_non_ar" : "semi_ar";
}

inline std::string_view to_string(TieBreak t) noexcept {
    return t == TieBreak::lowest_index ? "lowest_index" : "random";
}

/// Step budget used when none is given: T = L/2.
constexpr std::size_t default_steps(std::size_t length) noexcept { return length >= 2 ? length / 2 : 1; }

struct DecodeConfig {
    std::size_t length = 0;
    std::size_t steps = 0;
    Strategy strategy = Strategy::top_probability;
    AnchorSpec anchor{{}, AnchorSpec::kDefaultOffset, {}};
    std::optional<ModulationParams> modulation;
    bool eot_suppression = false;
    bool eot_hard_ban = false;
    DecodeMode mode = DecodeMode::fully_non_ar;
    std::size_t block_size = 0; // semi_ar only
    std::uint64_t seed = 0;
    TieBreak tie_break = TieBreak::lowest_index;
    std::size_t top_k = 2;
    std::vector<TokenId> prompt;

    std::size_t masked_pool() const noexcept { return length - (anchor.fits(length) ? anchor.tokens.size() : 0); }

    std::size_t block_count() const noexcept {
        return block_size == 0 ? 0 : (length + block_size - 1) / block_size;
    }

    void validate() const {
        if (length == 0) {
            throw ConfigError("response length must be positive");
        }
        if (!anchor.fits(length)) {
            anchor.start(length); // throws with the details
        }
        if (steps == 0) {
            throw ConfigError("step budget must be at least 1");
        }
        if (steps > masked_pool()) {
            throw ConfigError("step budget " + std::to_string(steps) + " exceeds the masked pool of " +
                              std::to_string(masked_pool()) + " positions");
        }
        if (top_k < 2) {
            throw ConfigError("top_k must be at least 2");
        }
        if (modulation) {
            modulation->validate();
        }
        if (eot_hard_ban && !eot_suppression) {
            throw ConfigError("eot_hard_ban requires eot_suppression");
        }
        if (mode == DecodeMode::semi_ar) {
            if (block_size == 0 || block_size > length) {
                throw ConfigError("semi-AR block size must lie in [1, L]");
            }
            if (!anchor.empty()) {
                throw ConfigError("semi-AR decoding runs without a suffix anchor");
            }
            if (steps < block_count()) {
                throw ConfigError("semi-AR needs at least one step per block: " + std::to_string(block_count()) +
                                  " blocks, " + std::to_string(steps) + " steps");
            }
        }
    }
};

/// Per-step unmask counts: k_t = ceil(remaining masked / remaining steps).
/// Sums to L - anchor_len; every count is within 1 of (L - anchor_len) / T.
inline std::vector<std::size_t> schedule_counts(std::size_t length, std::size_t steps, std::size_t anchor_len) {
    if (anchor_len > length) {
        throw ConfigError("anchor longer than the response");
    }
    const std::size_t pool = length - anchor_len;
    if (steps == 0 || steps > pool) {
        throw ConfigError("step budget " + std::to_string(steps) + " infeasible for a masked pool of " +
                          std::to_string(pool));
    }
    std::vector<std::size_t> counts;
    counts.reserve(steps);
    std::size_t remaining = pool;
    for (std::size_t left = steps; left > 0; --left) {
        const auto k = (remaining + left - 1) / left;
        counts.push_back(k);
        remaining -= k;
    }
    return counts;
}

/// Steps per semi-AR block: proportional to block size, ceil-rounded against
/// the remaining budget, at least one per block; the final block absorbs the
/// remainder.
inline std::vector<std::size_t> semi_ar_block_steps(std::size_t length, std::size_t steps, std::size_t block_size) {
    if (block_size == 0 || block_size > length) {
        throw ConfigError("semi-AR block size must lie in [1, L]");
    }
    const std::size_t blocks = (length + block_size - 1) / block_size;
    if (steps < blocks || steps > length) {
        throw ConfigError("semi-AR step budget " + std::to_string(steps) + " infeasible for " +
                          std::to_string(blocks) + " blocks over length " + std::to_string(length));
    }
    std::vector<std::size_t> out;
    out.reserve(blocks);
    std::size_t steps_left = steps;
    std::size_t length_left = length;
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t size = std::min(block_size, length - b * block_size);
        std::size_t s = steps_left;
        if (b + 1 < blocks) {
            s = (steps_left * size + length_left - 1) / length_left;
            s = std::min({s, size, steps_left - (blocks - b - 1)});
            s = std::max<std::size_t>(s, 1);
        }
        out.push_back(s);
        steps_left -= s;
        length_left -= size;
    }
    return out;
}

struct StepRecord {
    int step = 0;                   // forward index, 0..T-1
    std::size_t masked = 0;         // masked count before this step
    double progress = 0.0;          // p used for modulation
    std::vector<Position> candidates;
    std::vector<Score> conf_base;   // aligned with candidates
    std::vector<Score> conf_mod;    // aligned with candidates
    std::vector<Position> selected; // in selection order
    std::vector<TokenId> tokens;    // aligned with selected

    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct DecodeTrace {
    DecodeConfig config;
    Vocabulary vocab;
    std::string model_identity;
    std::vector<Position> anchor_positions;
    std::vector<StepRecord> steps;

    /// Forward step at which each position was decided; kPreDecoded for anchors.
    std::vector<int> decided_at() const {
        std::vector<int> out(config.length, kUndecided);
        for (auto a : anchor_positions) {
            out[a] = kPreDecoded;
        }
        for (const auto& s : steps) {
            for (auto i : s.selected) {
                out[i] = s.step;
            }
        }
        return out;
    }

    /// Replays the trace through SequenceState::unmask.
    std::vector<TokenId> final_tokens() const {
        auto state = init_state(config.length, config.anchor, vocab);
        state.begin(static_cast<int>(steps.size()));
        for (const auto& s : steps) {
            std::vector<std::pair<Position, TokenId>> assign;
            assign.reserve(s.selected.size());
            for (std::size_t k = 0; k < s.selected.size(); ++k) {
                assign.emplace_back(s.selected[k], s.tokens[k]);
            }
            state.unmask(assign);
        }
        return state.tokens(vocab.mask_id);
    }
};

struct DecodeResult {
    std::vector<TokenId> tokens;
    DecodeTrace trace;
};

namespace detail {

struct StepPlan {
    Position begin = 0; // candidate window [begin, end)
    Position end = 0;
    std::size_t count = 0;
};

inline std::vector<StepPlan> plan_steps(const DecodeConfig& config) {
    std::vector<StepPlan> plan;
    if (config.mode == DecodeMode::fully_non_ar) {
        for (auto k : schedule_counts(config.length, config.steps, config.anchor.tokens.size())) {
            plan.push_back({0, config.length, k});
        }
        return plan;
    }
    const auto block_steps = semi_ar_block_steps(config.length, config.steps, config.block_size);
    for (std::size_t b = 0; b < block_steps.size(); ++b) {
        const Position begin = b * config.block_size;
        const Position end = std::min(config.length, begin + config.block_size);
        for (auto k : schedule_counts(end - begin, block_steps[b], 0)) {
            plan.push_back({begin, end, k});
        }
    }
    return plan;
}

inline TokenId decoded_token(const PositionPrediction& pred, TokenId eot, bool hard_ban) {
    if (hard_ban && pred.argmax() == eot) {
        for (const auto& tp : pred.top) {
            if (tp.token != eot) {
                return tp.token;
            }
        }
    }
    return pred.argmax();
}

} // namespace detail

/// Fully non-AR or semi-AR decode, dispatching on config.mode. One denoiser
/// call per step: predict, score, suppress, modulate, select, unmask.
inline DecodeResult decode(const DecodeConfig& config, Denoiser& denoiser) {
    config.validate();
    const auto& vocab = denoiser.vocabulary();
    vocab.validate();
    for (auto t : config.prompt) {
        if (!vocab.contains(t)) {
            throw ConfigError("prompt token " + std::to_string(to_int(t)) + " outside the vocabulary");
        }
    }

    auto state = init_state(config.length, config.anchor, vocab);
    const auto plan = detail::plan_steps(config);
    state.begin(static_cast<int>(plan.size()));

    WeightField weights;
    if (config.modulation) {
        weights = compute_weights(config.length, state.anchor_positions(), *config.modulation);
    }

    DecodeTrace trace;
    trace.config = config;
    trace.vocab = vocab;
    trace.model_identity = denoiser.identity();
    trace.anchor_positions.assign(state.anchor_positions().begin(), state.anchor_positions().end());
    trace.steps.reserve(plan.size());

    DenoiserRequest request;
    request.prompt_tokens = config.prompt;
    request.top_k = config.top_k;

    for (const auto& sp : plan) {
        const int f = state.forward_step();
        request.response_slots.assign(state.slots().begin(), state.slots().end());

        DenoiserResponse resp;
        try {
            resp = predict_checked(denoiser, request);
        } catch (const DenoiserError& e) {
            throw DenoiserError("step " + std::to_string(f) + ": " + e.what());
        }

        const auto fstep = static_cast<std::uint64_t>(f);
        auto base = base_confidence(config.strategy, resp, config.seed, fstep);
        auto scored = base;
        if (config.eot_suppression) {
            scored = eot_suppress(std::move(scored), resp, vocab.eot_id);
        }
        const double p = progress(state);
        if (config.modulation) {
            scored = modulate(std::move(scored), weights, p, *config.modulation);
        }

        StepRecord rec;
        rec.step = f;
        rec.masked = state.masked_count();
        rec.progress = p;
        std::vector<std::size_t> idx; // indices into resp / conf vectors
        for (std::size_t k = 0; k < scored.positions.size(); ++k) {
            const auto i = scored.positions[k];
            if (i >= sp.begin && i < sp.end) {
                idx.push_back(k);
                rec.candidates.push_back(i);
                rec.conf_base.push_back(base.scores[k]);
                rec.conf_mod.push_back(scored.scores[k]);
            }
        }
        if (idx.size() < sp.count) {
            throw ContractError("schedule asks for " + std::to_string(sp.count) + " positions but only " +
                                std::to_string(idx.size()) + " are masked");
        }

        auto tie_key = [&](Position i) -> std::uint64_t {
            if (config.tie_break == TieBreak::random) {
                return counter_hash(config.seed ^ 0x7E1EB7EAULL, fstep, i);
            }
            return i;
        };
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            const auto& sa = scored.scores[a];
            const auto& sb = scored.scores[b];
            if (sa != sb) {
                return sa > sb;
            }
            const auto ka = tie_key(scored.positions[a]);
            const auto kb = tie_key(scored.positions[b]);
            if (ka != kb) {
                return ka < kb;
            }
            return scored.positions[a] < scored.positions[b];
        });

        std::vector<std::pair<Position, TokenId>> assign;
        assign.reserve(sp.count);
        for (std::size_t r = 0; r < sp.count; ++r) {
            const auto& pred = resp.predictions[idx[r]];
            const auto tok = detail::decoded_token(pred, vocab.eot_id, config.eot_hard_ban);
            rec.selected.push_back(pred.position);
            rec.tokens.push_back(tok);
            assign.emplace_back(pred.position, tok);
        }
        state.unmask(assign);
        trace.steps.push_back(std::move(rec));
    }

    return {state.tokens(vocab.mask_id), std::move(trace)};
}

/// Semi-AR block decode; identical to decode() with mode = semi_ar.
inline DecodeResult decode_semi_ar(DecodeConfig config, std::size_t block_size, Denoiser& denoiser) {
    config.mode = DecodeMode::semi_ar;
    config.block_size = block_size;
    return decode(config, denoiser);
}

} // namespace sacm
