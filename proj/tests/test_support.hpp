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

#include "oracle/brute_force.hpp"
#include "sacm/sacm.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace sacm::testing {

// Token layout shared by the synthetic fixtures.
inline constexpr std::uint32_t kVocabSize = 64;
inline constexpr TokenId kMask = token(0);
inline constexpr TokenId kEot = token(1);
inline const std::vector<TokenId> kAnchorTokens{token(2), token(3), token(4)};
inline const std::vector<TokenId> kFillTokens{token(5), token(6)};

inline Vocabulary test_vocab() {
    Vocabulary v;
    v.size = kVocabSize;
    v.mask_id = kMask;
    v.eot_id = kEot;
    return v;
}

inline std::vector<TokenId> token_range(std::uint32_t lo, std::uint32_t hi) {
    std::vector<TokenId> out;
    for (auto t = lo; t < hi; ++t) {
        out.push_back(token(t));
    }
    return out;
}

/// Content tokens 7..39 followed by eot_suffix EOT tokens.
inline std::vector<TokenId> make_target(std::size_t length, std::size_t eot_suffix, std::uint64_t seed = 0) {
    std::vector<TokenId> t;
    for (std::size_t i = 0; i < length; ++i) {
        t.push_back(i + eot_suffix < length ? token(7 + static_cast<std::uint32_t>(mix64(seed + i) % 33)) : kEot);
    }
    return t;
}

inline SyntheticModelConfig base_model(std::size_t length, std::size_t eot_suffix) {
    SyntheticModelConfig c;
    c.vocab = test_vocab();
    c.target = make_target(length, eot_suffix);
    c.context_window = 4;
    c.base_conf = 0.4;
    c.noise_vocab = token_range(40, 64);
    c.anchor_vocab = kAnchorTokens;
    c.seed = 7;
    return c;
}

/// A random but valid synthetic model of the given length.
inline SyntheticModelConfig random_model(std::mt19937_64& rng, std::size_t length) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SyntheticModelConfig c;
    c.vocab = test_vocab();
    const std::size_t suffix = std::uniform_int_distribution<std::size_t>(0, length)(rng);
    c.target = make_target(length, suffix, rng());
    c.context_window = std::uniform_int_distribution<std::size_t>(1, 5)(rng);
    c.base_conf = 0.05 + 0.55 * u(rng);
    const double room = 1.0 - c.base_conf;
    c.context_gain = room * u(rng);
    c.eot_boost = u(rng) < 0.7 ? room * u(rng) : 0.0;
    c.anchor_pull = u(rng) < 0.7 ? room * u(rng) : 0.0;
    c.noise_vocab = token_range(40, 64);
    c.anchor_vocab = kAnchorTokens;
    if (u(rng) < 0.5) {
        c.fill_vocab = kFillTokens;
    }
    c.seed = rng();
    return c;
}

inline Strategy to_strategy(oracle::Scoring s) {
    switch (s) {
    case oracle::Scoring::top_probability:
        return Strategy::top_probability;
    case oracle::Scoring::top_margin:
        return Strategy::top_margin;
    case oracle::Scoring::random:
        return Strategy::random;
    }
    return Strategy::top_probability;
}

/// Library DecodeConfig equivalent of an oracle setup.
inline DecodeConfig to_decode_config(const oracle::Setup& s) {
    DecodeConfig c;
    c.length = s.length;
    c.steps = s.steps;
    c.strategy = to_strategy(s.scoring);
    c.anchor.tokens = s.anchor;
    c.anchor.offset_from_end = s.anchor_offset;
    if (s.modulate) {
        c.modulation = ModulationParams{s.kappa, s.beta, s.gamma, s.progress_dependent};
    }
    c.eot_suppression = s.suppress_eot;
    c.eot_hard_ban = s.hard_ban;
    c.seed = s.seed;
    return c;
}

/// Random oracle setup over the acceptance grid: strategy, anchor of length 0
/// or 2 at a random offset, and random modulation/suppression switches.
inline oracle::Setup random_setup(std::mt19937_64& rng, std::size_t length, std::size_t steps,
                                  oracle::Scoring scoring, std::size_t anchor_len) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    oracle::Setup s;
    s.length = length;
    s.scoring = scoring;
    if (anchor_len > 0) {
        s.anchor.assign(kAnchorTokens.begin(), kAnchorTokens.begin() + static_cast<long>(anchor_len));
        s.anchor_offset = std::uniform_int_distribution<std::size_t>(0, length - anchor_len)(rng);
    }
    s.steps = std::min(steps, length - anchor_len);
    s.modulate = anchor_len > 0 && u(rng) < 0.75;
    s.kappa = 1.0 + 20.0 * u(rng);
    s.beta = 0.5 + 1.5 * u(rng);
    s.gamma = 0.3 + 1.2 * u(rng);
    s.progress_dependent = u(rng) < 0.7;
    s.suppress_eot = u(rng) < 0.3;
    s.hard_ban = s.suppress_eot && u(rng) < 0.5;
    s.seed = rng();
    return s;
}

inline double score_as_double(const Score& s) {
    return s.is_suppressed() ? -std::numeric_limits<double>::infinity() : s.value();
}

/// Exact equality of a library trace and an oracle run.
inline bool trace_matches(const DecodeTrace& trace, const oracle::Run& run, std::string* why = nullptr) {
    auto fail = [&](const std::string& msg) {
        if (why) {
            *why = msg;
        }
        return false;
    };
    if (trace.steps.size() != run.steps.size()) {
        return fail("step count differs");
    }
    for (std::size_t t = 0; t < run.steps.size(); ++t) {
        const auto& a = trace.steps[t];
        const auto& b = run.steps[t];
        const auto at = " at step " + std::to_string(t);
        if (a.candidates != b.candidates) {
            return fail("candidates differ" + at);
        }
        for (std::size_t k = 0; k < b.candidates.size(); ++k) {
            if (score_as_double(a.conf_base[k]) != b.conf_base[k]) {
                return fail("base confidence differs" + at);
            }
            if (score_as_double(a.conf_mod[k]) != b.conf_mod[k]) {
                return fail("modulated confidence differs" + at);
            }
        }
        if (a.selected != b.selected) {
            return fail("selection differs" + at);
        }
        if (a.tokens != b.tokens) {
            return fail("tokens differ" + at);
        }
    }
    return true;
}

} // namespace sacm::testing
