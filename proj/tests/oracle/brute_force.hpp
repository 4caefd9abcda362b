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

// Naive reference decoder for the synthetic model. Written independently of
// the library's decoding code. Every
// step recomputes everything from scratch with plain loops and picks the
// selected positions by repeated linear max-scans. Only plain data types
// (TokenId, SyntheticModelConfig) are shared.

#include "sacm/synthetic_denoiser.hpp"
#include "sacm/types.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

enum class Scoring { top_probability, top_margin, random };

struct Setup {
    std::size_t length = 0;
    std::size_t steps = 0;
    Scoring scoring = Scoring::top_probability;
    std::vector<sacm::TokenId> anchor;
    std::size_t anchor_offset = 20;
    bool modulate = false;
    double kappa = 14.0;
    double beta = 1.3;
    double gamma = 0.85;
    bool progress_dependent = true;
    bool suppress_eot = false;
    bool hard_ban = false;
    std::uint64_t seed = 0;
};

struct Step {
    std::vector<std::size_t> candidates;
    std::vector<double> conf_base; // -inf marks a suppressed score
    std::vector<double> conf_mod;
    std::vector<std::size_t> selected;
    std::vector<sacm::TokenId> tokens;
};

struct Run {
    std::vector<Step> steps;
    std::vector<std::optional<sacm::TokenId>> slots;
    std::vector<int> decided_at;
};

inline std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t key3(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = splitmix(seed);
    h = splitmix(h ^ splitmix(a));
    h = splitmix(h ^ splitmix(b));
    return h;
}

inline bool is_anchor_token(const sacm::SyntheticModelConfig& m, sacm::TokenId t) {
    for (auto a : m.anchor_vocab) {
        if (a == t) {
            return true;
        }
    }
    return false;
}

struct Prediction {
    sacm::TokenId top;
    double q;
    double second;
    sacm::TokenId second_token;
};

inline Prediction predict(const sacm::SyntheticModelConfig& m, const std::vector<std::optional<sacm::TokenId>>& slots,
                          std::size_t i) {
    const long n = static_cast<long>(slots.size());
    const long w = static_cast<long>(m.context_window);
    std::size_t neighbors = 0;
    bool near_anchor = false;
    for (long j = static_cast<long>(i) - w; j <= static_cast<long>(i) + w; ++j) {
        if (j < 0 || j >= n || j == static_cast<long>(i)) {
            continue;
        }
        if (slots[j]) {
            ++neighbors;
            if (is_anchor_token(m, *slots[j])) {
                near_anchor = true;
            }
        }
    }
    bool anchor_right = false;
    for (long j = static_cast<long>(i) + 1; j < n; ++j) {
        if (slots[j] && is_anchor_token(m, *slots[j])) {
            anchor_right = true;
        }
    }
    sacm::TokenId top = m.target[i];
    if (top == m.vocab.eot_id && anchor_right && !m.fill_vocab.empty()) {
        top = m.fill_vocab[key3(m.seed, i, 0xF111ULL) % m.fill_vocab.size()];
    }
    double q = m.base_conf + m.context_gain * static_cast<double>(neighbors) / static_cast<double>(2 * w);
    if (top == m.vocab.eot_id) {
        q += m.eot_boost;
    }
    if (near_anchor) {
        q += m.anchor_pull;
    }
    if (q < 0.0) {
        q = 0.0;
    }
    if (q > 1.0) {
        q = 1.0;
    }
    double second = 0.9 * (1.0 - q);
    if (0.5 * q < second) {
        second = 0.5 * q;
    }
    std::size_t cursor = key3(m.seed, i, 0xD157ULL) % m.noise_vocab.size();
    while (m.noise_vocab[cursor] == top) {
        cursor = (cursor + 1) % m.noise_vocab.size();
    }
    return {top, q, second, m.noise_vocab[cursor]};
}

inline Run simulate(const sacm::SyntheticModelConfig& m, const Setup& s) {
    const std::size_t L = s.length;
    Run run;
    run.slots.assign(L, std::nullopt);
    run.decided_at.assign(L, -2);
    std::vector<std::size_t> anchors;
    if (!s.anchor.empty()) {
        const std::size_t first = L - s.anchor_offset - s.anchor.size();
        for (std::size_t k = 0; k < s.anchor.size(); ++k) {
            run.slots[first + k] = s.anchor[k];
            run.decided_at[first + k] = -1;
            anchors.push_back(first + k);
        }
    }

    for (std::size_t t = 0; t < s.steps; ++t) {
        std::size_t masked = 0;
        for (const auto& x : run.slots) {
            masked += x ? 0 : 1;
        }
        const std::size_t left = s.steps - t;
        const std::size_t k = (masked + left - 1) / left;
        const double p = 1.0 - static_cast<double>(masked) / static_cast<double>(L);

        Step step;
        std::vector<Prediction> preds;
        for (std::size_t i = 0; i < L; ++i) {
            if (run.slots[i]) {
                continue;
            }
            const auto pr = predict(m, run.slots, i);
            double c = 0.0;
            switch (s.scoring) {
            case Scoring::top_probability:
                c = pr.q;
                break;
            case Scoring::top_margin:
                c = pr.q - pr.second;
                break;
            case Scoring::random:
                c = static_cast<double>(key3(s.seed, t, i) >> 11) * 0x1.0p-53;
                break;
            }
            const bool suppressed = s.suppress_eot && pr.top == m.vocab.eot_id;
            double cm = suppressed ? -std::numeric_limits<double>::infinity() : c;
            if (s.modulate && !suppressed) {
                double best = 0.0;
                for (auto a : anchors) {
                    const double d = i > a ? static_cast<double>(i - a) : static_cast<double>(a - i);
                    const double e = std::exp(-d / s.kappa);
                    if (e > best) {
                        best = e;
                    }
                }
                double w = s.beta * best;
                if (w > 1.0) {
                    w = 1.0;
                }
                if (anchors.empty()) {
                    w = 0.0;
                }
                const double factor = s.progress_dependent ? 1.0 - w * std::pow(1.0 - p, s.gamma) : 1.0 - w;
                cm = c * factor;
            }
            step.candidates.push_back(i);
            step.conf_base.push_back(c);
            step.conf_mod.push_back(cm);
            preds.push_back(pr);
        }

        std::vector<bool> taken(step.candidates.size(), false);
        for (std::size_t r = 0; r < k; ++r) {
            std::size_t best = step.candidates.size();
            for (std::size_t c = 0; c < step.candidates.size(); ++c) {
                if (taken[c]) {
                    continue;
                }
                if (best == step.candidates.size() || step.conf_mod[c] > step.conf_mod[best]) {
                    best = c;
                }
            }
            taken[best] = true;
            const auto& pr = preds[best];
            sacm::TokenId tok = pr.top;
            if (s.hard_ban && tok == m.vocab.eot_id) {
                tok = pr.second_token;
            }
            step.selected.push_back(step.candidates[best]);
            step.tokens.push_back(tok);
        }
        for (std::size_t r = 0; r < step.selected.size(); ++r) {
            run.slots[step.selected[r]] = step.tokens[r];
            run.decided_at[step.selected[r]] = static_cast<int>(t);
        }
        run.steps.push_back(std::move(step));
    }
    return run;
}

} // namespace oracle
