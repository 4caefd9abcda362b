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

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace sacm;
using sacm::testing::test_vocab;

namespace {

AnchorSpec anchor_of(std::size_t len, std::size_t offset = AnchorSpec::kDefaultOffset) {
    AnchorSpec a;
    for (std::size_t k = 0; k < len; ++k) {
        a.tokens.push_back(token(2 + static_cast<std::uint32_t>(k % 3)));
    }
    a.offset_from_end = offset;
    return a;
}

} // namespace

TEST(InitState, AnchorEndsOffsetPositionsBeforeTheEnd) {
    const auto s = init_state(256, anchor_of(3), test_vocab());
    ASSERT_EQ(s.anchor_positions().size(), 3u);
    EXPECT_EQ(s.anchor_positions()[0], 233u);
    EXPECT_EQ(s.anchor_positions()[2], 235u);
    EXPECT_EQ(s.masked_count(), 253u);
    for (Position i = 233; i <= 235; ++i) {
        EXPECT_FALSE(s.is_masked(i));
        EXPECT_EQ(s.decided_at()[i], kPreDecoded);
    }
    // Exactly offset_from_end masked slots follow the anchor.
    for (Position i = 236; i < 256; ++i) {
        EXPECT_TRUE(s.is_masked(i));
    }
}

TEST(InitState, EmptyAnchorIsPlainMaskInit) {
    const auto s = init_state(8, AnchorSpec{}, test_vocab());
    EXPECT_EQ(s.masked_count(), 8u);
    EXPECT_TRUE(s.anchor_positions().empty());
    for (Position i = 0; i < 8; ++i) {
        EXPECT_TRUE(s.is_masked(i));
        EXPECT_EQ(s.decided_at()[i], kUndecided);
    }
    AnchorSpec empty_with_offset;
    empty_with_offset.offset_from_end = 1000;
    EXPECT_EQ(init_state(8, empty_with_offset, test_vocab()), s);
}

TEST(InitState, AnchorThatDoesNotFitIsAConfigError) {
    EXPECT_THROW(init_state(4, anchor_of(5, 0), test_vocab()), ConfigError);
    EXPECT_THROW(init_state(22, anchor_of(3, 20), test_vocab()), ConfigError);
    EXPECT_NO_THROW(init_state(23, anchor_of(3, 20), test_vocab()));
    EXPECT_THROW(init_state(0, AnchorSpec{}, test_vocab()), ConfigError);
}

TEST(InitState, RejectsMaskTokenInsideAnchor) {
    AnchorSpec a;
    a.tokens = {sacm::testing::kMask};
    a.offset_from_end = 0;
    EXPECT_THROW(init_state(4, a, test_vocab()), ConfigError);
}

TEST(Progress, CountsAnchorSlotsAsDecided) {
    const auto s = init_state(256, anchor_of(3), test_vocab());
    EXPECT_DOUBLE_EQ(progress(s), 3.0 / 256.0);
    EXPECT_NEAR(progress(s), 0.01172, 1e-5);
}

TEST(Progress, HalfAndFull) {
    auto s = init_state(10, AnchorSpec{}, test_vocab());
    s.begin(2);
    s.unmask({{0, token(7)}, {1, token(7)}, {2, token(7)}, {3, token(7)}, {4, token(7)}});
    EXPECT_DOUBLE_EQ(progress(s), 0.5);
    s.unmask({{5, token(7)}, {6, token(7)}, {7, token(7)}, {8, token(7)}, {9, token(7)}});
    EXPECT_DOUBLE_EQ(progress(s), 1.0);
}

TEST(Unmask, FillsSlotsAndRecordsForwardStep) {
    auto s = init_state(3, AnchorSpec{}, test_vocab());
    s.begin(3);
    s.unmask({{1, token(7)}});
    EXPECT_EQ(s.masked_positions(), (std::vector<Position>{0, 2}));
    EXPECT_EQ(s.slot(1), token(7));
    EXPECT_EQ(s.decided_at()[1], 0);
    EXPECT_EQ(s.step(), 2);
    s.unmask({{0, token(8)}});
    EXPECT_EQ(s.decided_at()[0], 1);
}

TEST(Unmask, RejectsAnchorDecidedAndDuplicatePositions) {
    auto s = init_state(24, anchor_of(2), test_vocab());
    s.begin(4);
    EXPECT_THROW(s.unmask({{s.anchor_positions()[0], token(7)}}), ContractError);
    EXPECT_THROW(s.unmask({{0, token(7)}, {0, token(8)}}), ContractError);
    EXPECT_THROW(s.unmask({{99, token(7)}}), ContractError);
    // A rejected call leaves the state untouched.
    EXPECT_EQ(s.masked_count(), 22u);
    EXPECT_EQ(s.step(), 4);
    s.unmask({{0, token(7)}});
    EXPECT_THROW(s.unmask({{0, token(9)}}), ContractError);
}

TEST(Unmask, EmptyAssignmentOnlyAdvancesTheStep) {
    auto s = init_state(5, AnchorSpec{}, test_vocab());
    s.begin(2);
    auto before = s;
    s.unmask(std::span<const std::pair<Position, TokenId>>{});
    EXPECT_EQ(s.masked_count(), before.masked_count());
    EXPECT_EQ(s.tokens(sacm::testing::kMask), before.tokens(sacm::testing::kMask));
    EXPECT_EQ(s.step(), 1);
}

TEST(Unmask, NoStepsLeftIsAContractViolation) {
    auto s = init_state(5, AnchorSpec{}, test_vocab());
    s.begin(1);
    s.unmask({{0, token(7)}});
    EXPECT_THROW(s.unmask({{1, token(7)}}), ContractError);
}

TEST(Unmask, FreeFunctionReturnsUpdatedCopy) {
    auto s = init_state(4, AnchorSpec{}, test_vocab());
    s.begin(2);
    const std::vector<std::pair<Position, TokenId>> assign{{3, token(9)}};
    const auto next = unmask(s, assign);
    EXPECT_TRUE(s.is_masked(3));
    EXPECT_FALSE(next.is_masked(3));
}

// Random unmask sequences: progress stays in [0,1], strictly increases on
// non-empty steps, and decided slots never change.
TEST(StateProperties, ProgressMonotoneAndSlotsImmutable) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t L = std::uniform_int_distribution<std::size_t>(1, 64)(rng);
        AnchorSpec a;
        const std::size_t alen = std::uniform_int_distribution<std::size_t>(0, std::min<std::size_t>(L, 4))(rng);
        a = anchor_of(alen, std::uniform_int_distribution<std::size_t>(0, L - alen)(rng));
        auto s = init_state(L, a, test_vocab());
        s.begin(static_cast<int>(L));
        double prev = progress(s);
        while (s.masked_count() > 0) {
            auto masked = s.masked_positions();
            std::shuffle(masked.begin(), masked.end(), rng);
            const std::size_t k = std::uniform_int_distribution<std::size_t>(0, masked.size())(rng);
            std::vector<std::pair<Position, TokenId>> assign;
            for (std::size_t j = 0; j < k; ++j) {
                assign.emplace_back(masked[j], token(10 + static_cast<std::uint32_t>(j % 20)));
            }
            const auto before = s.tokens(sacm::testing::kMask);
            if (s.step() == 0) {
                break;
            }
            s.unmask(assign);
            const auto after = s.tokens(sacm::testing::kMask);
            for (Position i = 0; i < L; ++i) {
                if (before[i] != sacm::testing::kMask) {
                    ASSERT_EQ(before[i], after[i]);
                }
            }
            const double p = progress(s);
            ASSERT_GE(p, 0.0);
            ASSERT_LE(p, 1.0);
            if (k > 0) {
                ASSERT_GT(p, prev);
            } else {
                ASSERT_EQ(p, prev);
            }
            prev = p;
            for (auto pos : s.anchor_positions()) {
                ASSERT_FALSE(s.is_masked(pos));
            }
        }
    }
}
