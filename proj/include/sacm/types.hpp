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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sacm {

/// Index into a denoiser vocabulary.
enum class TokenId : std::uint32_t {};

constexpr TokenId token(std::uint32_t id) noexcept { return static_cast<TokenId>(id); }
constexpr std::uint32_t to_int(TokenId id) noexcept { return static_cast<std::uint32_t>(id); }

/// A response slot: either MASKED (nullopt) or a decided token.
using Slot = std::optional<TokenId>;

/// Response-relative position, 0..L-1.
using Position = std::size_t;

struct Vocabulary {
    std::uint32_t size = 0;
    TokenId mask_id{};
    TokenId eot_id{};
    std::vector<std::string> display; // optional, indexed by token id

    bool contains(TokenId id) const noexcept { return to_int(id) < size; }

    void validate() const {
        if (size == 0) {
            throw ConfigError("vocabulary size must be positive");
        }
        if (mask_id == eot_id) {
            throw ConfigError("mask_id and eot_id must differ");
        }
        if (!contains(mask_id) || !contains(eot_id)) {
            throw ConfigError("mask_id and eot_id must be inside the vocabulary");
        }
        if (!display.empty() && display.size() != size) {
            throw ConfigError("display table size does not match vocabulary size");
        }
    }

    std::string render(TokenId id) const {
        if (to_int(id) < display.size()) {
            return display[to_int(id)];
        }
        return "<" + std::to_string(to_int(id)) + ">";
    }
};

inline bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.size == b.size && a.mask_id == b.mask_id && a.eot_id == b.eot_id;
}

} // namespace sacm
