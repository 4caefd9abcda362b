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

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sacm {

/// Suffix anchor: a token run pre-filled near the end of the response region.
/// offset_from_end counts the masked positions left after the anchor's last
/// token, so the anchor ends at L - offset_from_end - 1.
struct AnchorSpec {
    static constexpr std::size_t kDefaultOffset = 20;

    std::vector<TokenId> tokens;
    std::size_t offset_from_end = kDefaultOffset;
    std::string display; // optional human-readable form, e.g. "The answer is"

    bool empty() const noexcept { return tokens.empty(); }

    bool fits(std::size_t length) const noexcept {
        return tokens.empty() || offset_from_end + tokens.size() <= length;
    }

    /// First anchor position for a response of the given length.
    std::size_t start(std::size_t length) const {
        if (!fits(length)) {
            throw ConfigError("anchor of length " + std::to_string(tokens.size()) + " with offset " +
                              std::to_string(offset_from_end) + " does not fit in response length " +
                              std::to_string(length));
        }
        return length - offset_from_end - tokens.size();
    }

    std::vector<Position> positions(std::size_t length) const {
        std::vector<Position> out;
        if (tokens.empty()) {
            return out;
        }
        const auto first = start(length);
        out.reserve(tokens.size());
        for (std::size_t k = 0; k < tokens.size(); ++k) {
            out.push_back(first + k);
        }
        return out;
    }
};

/// decided_at value for anchor slots, which are filled before step 0.
inline constexpr int kPreDecoded = -1;
/// decided_at value for slots that are still masked.
inline constexpr int kUndecided = -2;

/// The partially decoded response x^(t).
///
/// Positions are response-relative; the prompt is never stored here. The step
/// counter counts down from T to 0; decided_at records the forward step index
/// T - t at which each slot was filled.
class SequenceState {
public:
    SequenceState() = default;

    std::size_t length() const noexcept { return slots_.size(); }
    std::span<const Slot> slots() const noexcept { return slots_; }
    const Slot& slot(Position i) const { return slots_.at(i); }
    std::span<const Position> anchor_positions() const noexcept { return anchors_; }
    std::span<const int> decided_at() const noexcept { return decided_at_; }
    std::size_t masked_count() const noexcept { return masked_; }
    int step() const noexcept { return step_; }
    int total_steps() const noexcept { return total_steps_; }
    int forward_step() const noexcept { return total_steps_ - step_; }
    bool is_masked(Position i) const { return !slots_.at(i).has_value(); }

    std::vector<Position> masked_positions() const {
        std::vector<Position> out;
        out.reserve(masked_);
        for (Position i = 0; i < slots_.size(); ++i) {
            if (!slots_[i]) {
                out.push_back(i);
            }
        }
        return out;
    }

    /// Sets the step budget; called once by the scheduler before the loop.
    void begin(int total_steps) {
        if (total_steps < 0) {
            throw ContractError("step budget must be non-negative");
        }
        total_steps_ = total_steps;
        step_ = total_steps;
    }

    /// Fills the listed slots and advances the step counter by one.
    void unmask(std::span<const std::pair<Position, TokenId>> assignments) {
        if (step_ <= 0) {
            throw ContractError("unmask called with no steps remaining");
        }
        for (std::size_t a = 0; a < assignments.size(); ++a) {
            const auto pos = assignments[a].first;
            if (pos >= slots_.size()) {
                throw ContractError("unmask position " + std::to_string(pos) + " out of range");
            }
            if (slots_[pos]) {
                throw ContractError("unmask position " + std::to_string(pos) + " is not masked");
            }
            for (std::size_t b = 0; b < a; ++b) {
                if (assignments[b].first == pos) {
                    throw ContractError("duplicate unmask position " + std::to_string(pos));
                }
            }
        }
        const int forward = forward_step();
        for (const auto& [pos, tok] : assignments) {
            slots_[pos] = tok;
            decided_at_[pos] = forward;
        }
        masked_ -= assignments.size();
        --step_;
    }

    void unmask(std::initializer_list<std::pair<Position, TokenId>> assignments) {
        unmask(std::span<const std::pair<Position, TokenId>>(assignments.begin(), assignments.size()));
    }

    /// Decided tokens, or mask_id for slots still masked.
    std::vector<TokenId> tokens(TokenId mask_id) const {
        std::vector<TokenId> out;
        out.reserve(slots_.size());
        for (const auto& s : slots_) {
            out.push_back(s.value_or(mask_id));
        }
        return out;
    }

    friend bool operator==(const SequenceState&, const SequenceState&) = default;

private:
    friend SequenceState init_state(std::size_t, const AnchorSpec&, const Vocabulary&);

    std::vector<Slot> slots_;
    std::vector<Position> anchors_;
    std::vector<int> decided_at_;
    std::size_t masked_ = 0;
    int step_ = 0;
    int total_steps_ = 0;
};

/// L masked slots with the anchor tokens inserted.
inline SequenceState init_state(std::size_t length, const AnchorSpec& anchor, const Vocabulary& vocab) {
    if (length == 0) {
        throw ConfigError("response length must be positive");
    }
    for (auto tok : anchor.tokens) {
        if (!vocab.contains(tok) || tok == vocab.mask_id) {
            throw ConfigError("anchor token " + std::to_string(to_int(tok)) + " is not a valid vocabulary token");
        }
    }
    SequenceState s;
    s.slots_.assign(length, std::nullopt);
    s.decided_at_.assign(length, kUndecided);
    s.anchors_ = anchor.positions(length);
    for (std::size_t k = 0; k < s.anchors_.size(); ++k) {
        s.slots_[s.anchors_[k]] = anchor.tokens[k];
        s.decided_at_[s.anchors_[k]] = kPreDecoded;
    }
    s.masked_ = length - s.anchors_.size();
    return s;
}

/// Decoding progress 1 - m/L. Anchor slots count as decided.
inline double progress(const SequenceState& state) noexcept {
    if (state.length() == 0) {
        return 1.0;
    }
    return 1.0 - static_cast<double>(state.masked_count()) / static_cast<double>(state.length());
}

inline SequenceState unmask(SequenceState state, std::span<const std::pair<Position, TokenId>> assignments) {
    state.unmask(assignments);
    return state;
}

} // namespace sacm
