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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace sacm {

/// Table-driven toy denoiser that reproduces the two confidence failure modes
/// on demand: EOT overconfidence (eot_boost) and anchor-induced local
/// overconfidence (anchor_pull). Each knob is independent.
///
/// For a masked position i the top-1 token is target[i] with probability
///
///   q_i = clamp(base_conf
///               + context_gain * decided_neighbors(i, W) / (2W)
///               + eot_boost   * [top-1 token is EOT]
///               + anchor_pull * [a decided anchor-vocab token lies within W of i], 0, 1)
///
/// followed by seeded distractors from noise_vocab. When fill_vocab is
/// non-empty, an EOT target that has a decided anchor-vocab token somewhere to
/// its right is replaced by a fill token: the anchor tells the model the
/// response continues past that point.
struct SyntheticModelConfig {
    Vocabulary vocab;
    std::vector<TokenId> target;
    std::size_t context_window = 4;
    double base_conf = 0.4;
    double context_gain = 0.0;
    double eot_boost = 0.0;
    double anchor_pull = 0.0;
    std::vector<TokenId> noise_vocab;
    std::vector<TokenId> anchor_vocab;
    std::vector<TokenId> fill_vocab;
    std::uint64_t seed = 0;

    std::size_t length() const noexcept { return target.size(); }

    void validate() const {
        vocab.validate();
        if (target.empty()) {
            throw ConfigError("synthetic model target must be non-empty");
        }
        if (context_window == 0) {
            throw ConfigError("synthetic model context_window must be positive");
        }
        if (!(base_conf > 0.0 && base_conf < 1.0)) {
            throw ConfigError("synthetic model base_conf must lie in (0,1)");
        }
        if (!(context_gain >= 0.0 && eot_boost >= 0.0 && anchor_pull >= 0.0)) {
            throw ConfigError("synthetic model gains must be non-negative");
        }
        if (base_conf + context_gain > 1.0 || base_conf + eot_boost > 1.0 || base_conf + anchor_pull > 1.0) {
            throw ConfigError("synthetic model base_conf plus any single gain must not exceed 1");
        }
        auto check_tokens = [&](const std::vector<TokenId>& list, const char* name) {
            for (auto t : list) {
                if (!vocab.contains(t) || t == vocab.mask_id) {
                    throw ConfigError(std::string("synthetic model ") + name + " holds invalid token " +
                                      std::to_string(to_int(t)));
                }
            }
        };
        check_tokens(target, "target");
        check_tokens(noise_vocab, "noise_vocab");
        check_tokens(anchor_vocab, "anchor_vocab");
        check_tokens(fill_vocab, "fill_vocab");
        auto sorted = noise_vocab;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw ConfigError("synthetic model noise_vocab has duplicate tokens");
        }
        if (noise_vocab.empty()) {
            throw ConfigError("synthetic model noise_vocab must be non-empty");
        }
        for (auto t : fill_vocab) {
            if (t == vocab.eot_id) {
                throw ConfigError("synthetic model fill_vocab must not contain the EOT token");
            }
        }
    }
};

namespace detail {

inline bool contains_token(const std::vector<TokenId>& list, TokenId t) {
    return std::find(list.begin(), list.end(), t) != list.end();
}

/// Second-ranked probability: 0.9 of the remaining mass, capped at half the
/// top-1 probability so the argmax stays first.
inline double runner_up_prob(double q) { return std::min(0.9 * (1.0 - q), 0.5 * q); }

} // namespace detail

/// Top-1 token at position i; anchor_to_right says whether a decided anchor
/// token sits somewhere after i.
inline TokenId synth_top_token(const SyntheticModelConfig& config, Position i, bool anchor_to_right) {
    const auto t = config.target[i];
    if (t == config.vocab.eot_id && anchor_to_right && !config.fill_vocab.empty()) {
        const auto h = counter_hash(config.seed, i, 0xF111ULL);
        return config.fill_vocab[h % config.fill_vocab.size()];
    }
    return t;
}

inline DenoiserResponse synth_predict(const SyntheticModelConfig& config, const DenoiserRequest& request) {
    const auto& slots = request.response_slots;
    const std::size_t n = slots.size();
    if (n != config.length()) {
        throw ConfigError("synthetic model target length " + std::to_string(config.length()) +
                          " does not match request length " + std::to_string(n));
    }
    const std::size_t w = config.context_window;

    // Prefix counts of decided slots and decided anchor-vocab slots.
    std::vector<std::size_t> decided(n + 1, 0);
    std::vector<std::size_t> anchors(n + 1, 0);
    for (std::size_t j = 0; j < n; ++j) {
        const bool d = slots[j].has_value();
        decided[j + 1] = decided[j] + (d ? 1 : 0);
        anchors[j + 1] = anchors[j] + ((d && detail::contains_token(config.anchor_vocab, *slots[j])) ? 1 : 0);
    }

    DenoiserResponse out;
    for (Position i = 0; i < n; ++i) {
        if (slots[i]) {
            continue;
        }
        const std::size_t lo = i >= w ? i - w : 0;
        const std::size_t hi = std::min(n, i + w + 1);
        // Slot i is masked, so it never contributes to either count.
        const auto neighbors = decided[hi] - decided[lo];
        const bool near_anchor = anchors[hi] - anchors[lo] > 0;
        const bool anchor_to_right = anchors[n] - anchors[i + 1] > 0;

        const auto top = synth_top_token(config, i, anchor_to_right);
        double q = config.base_conf +
                   config.context_gain * static_cast<double>(neighbors) / static_cast<double>(2 * w);
        if (top == config.vocab.eot_id) {
            q += config.eot_boost;
        }
        if (near_anchor) {
            q += config.anchor_pull;
        }
        q = std::clamp(q, 0.0, 1.0);

        PositionPrediction pred;
        pred.position = i;
        pred.top.push_back({top, q});

        const auto& noise = config.noise_vocab;
        std::size_t cursor = counter_hash(config.seed, i, 0xD157ULL) % noise.size();
        double p = detail::runner_up_prob(q);
        for (std::size_t scanned = 0; pred.top.size() < request.top_k && scanned < noise.size(); ++scanned) {
            const auto cand = noise[cursor];
            cursor = (cursor + 1) % noise.size();
            if (cand == top) {
                continue;
            }
            pred.top.push_back({cand, p});
            p *= 0.1;
        }
        if (pred.top.size() < request.top_k) {
            throw ConfigError("synthetic model noise_vocab too small for top_k=" + std::to_string(request.top_k));
        }
        // q = 1 zeroes every runner-up; equal probabilities go by token id.
        std::stable_sort(pred.top.begin() + 1, pred.top.end(), [](const TokenProb& a, const TokenProb& b) {
            return a.prob != b.prob ? a.prob > b.prob : a.token < b.token;
        });
        out.predictions.push_back(std::move(pred));
    }
    return out;
}

class SyntheticDenoiser final : public Denoiser {
public:
    explicit SyntheticDenoiser(SyntheticModelConfig config) : config_(std::move(config)) { config_.validate(); }

    DenoiserResponse predict(const DenoiserRequest& request) override { return synth_predict(config_, request); }
    const Vocabulary& vocabulary() const override { return config_.vocab; }
    std::string identity() const override { return "synthetic"; }
    const SyntheticModelConfig& config() const noexcept { return config_; }

private:
    SyntheticModelConfig config_;
};

} // namespace sacm
