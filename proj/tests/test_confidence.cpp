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

#include <numeric>

using namespace sacm;
using namespace sacm::testing;

namespace {

PositionPrediction pred(Position i, std::vector<std::pair<std::uint32_t, double>> pairs) {
    PositionPrediction p;
    p.position = i;
    for (auto [t, pr] : pairs) {
        p.top.push_back({token(t), pr});
    }
    return p;
}

DenoiserResponse response(std::vector<PositionPrediction> ps) {
    DenoiserResponse r;
    r.predictions = std::move(ps);
    return r;
}

} // namespace

TEST(TopProbability, ReadsTheFirstPair) {
    const auto c = top_probability(response({pred(3, {{5, 0.8}, {2, 0.1}})}));
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c.positions[0], 3u);
    EXPECT_EQ(c.scores[0], Score(0.8));
}

TEST(TopProbability, UniformScoresAreAllEqual) {
    const auto c = top_probability(response({pred(0, {{5, 0.5}, {2, 0.1}}), pred(1, {{6, 0.5}, {2, 0.2}})}));
    EXPECT_EQ(c.scores[0], c.scores[1]);
}

TEST(TopProbability, SyntheticEotPosition) {
    auto cfg = base_model(8, 2);
    cfg.eot_boost = 0.5;
    DenoiserRequest req;
    req.response_slots.assign(8, std::nullopt);
    const auto c = top_probability(synth_predict(cfg, req));
    EXPECT_DOUBLE_EQ(c.scores[7].value(), 0.9);
}

TEST(TopMargin, SubtractsTheRunnerUp) {
    const auto c = top_margin(response({pred(0, {{5, 0.8}, {2, 0.1}}), pred(1, {{5, 0.5}, {2, 0.5}})}));
    EXPECT_DOUBLE_EQ(c.scores[0].value(), 0.7);
    EXPECT_EQ(c.scores[1], Score(0.0));
}

TEST(TopMargin, SinglePairIsAContractViolation) {
    EXPECT_THROW(top_margin(response({pred(0, {{5, 0.8}})})), ContractError);
}

TEST(TopMargin, NeverExceedsTopProbability) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto cfg = random_model(rng, 20);
        DenoiserRequest req;
        req.response_slots.assign(20, std::nullopt);
        req.response_slots[rng() % 20] = token(9);
        const auto resp = synth_predict(cfg, req);
        const auto a = top_probability(resp);
        const auto b = top_margin(resp);
        for (std::size_t k = 0; k < a.size(); ++k) {
            ASSERT_LE(b.scores[k], a.scores[k]);
            ASSERT_GE(b.scores[k].value(), 0.0);
        }
    }
}

TEST(RandomScores, DeterministicAndInUnitInterval) {
    const std::vector<Position> masked{0, 3, 4, 9};
    const auto a = random_scores(masked, 42, 5);
    EXPECT_EQ(a, random_scores(masked, 42, 5));
    for (const auto& s : a.scores) {
        EXPECT_GE(s.value(), 0.0);
        EXPECT_LT(s.value(), 1.0);
    }
    EXPECT_EQ(random_scores({}, 42, 5).size(), 0u);
}

TEST(RandomScores, KeyedByPositionNotByMaskedSet) {
    const std::vector<Position> all{0, 1, 2, 3};
    const std::vector<Position> some{1, 3};
    const auto a = random_scores(all, 7, 2);
    const auto b = random_scores(some, 7, 2);
    EXPECT_EQ(a.scores[1], b.scores[0]);
    EXPECT_EQ(a.scores[3], b.scores[1]);
}

TEST(RandomScores, DifferentSeedsDifferInAtLeast99Of100Draws) {
    std::vector<Position> masked(16);
    std::iota(masked.begin(), masked.end(), 0);
    int differing = 0;
    for (std::uint64_t d = 0; d < 100; ++d) {
        if (random_scores(masked, 2 * d, 0) != random_scores(masked, 2 * d + 1, 0)) {
            ++differing;
        }
    }
    EXPECT_GE(differing, 99);
}

TEST(EotSuppress, MarksArgmaxEotPositionsOnly) {
    std::vector<PositionPrediction> ps;
    for (Position i = 0; i < 8; ++i) {
        ps.push_back(i == 6 || i == 7 ? pred(i, {{1, 0.9}, {9, 0.05}}) : pred(i, {{9, 0.4}, {1, 0.3}}));
    }
    const auto resp = response(ps);
    const auto base = top_probability(resp);
    const auto s = eot_suppress(base, resp, kEot);
    for (Position i = 0; i < 8; ++i) {
        if (i >= 6) {
            EXPECT_TRUE(s.scores[i].is_suppressed());
        } else {
            EXPECT_EQ(s.scores[i], base.scores[i]);
        }
    }
}

TEST(EotSuppress, IdentityWithoutEot) {
    const auto resp = response({pred(0, {{9, 0.4}, {1, 0.3}}), pred(1, {{8, 0.2}, {9, 0.1}})});
    const auto base = top_margin(resp);
    EXPECT_EQ(eot_suppress(base, resp, kEot), base);
}

TEST(EotSuppress, SuppressedOrdersBelowEveryFiniteScore) {
    const auto s = Score::suppressed();
    EXPECT_LT(s, Score(0.0));
    EXPECT_LT(s, Score(-1e300));
    EXPECT_EQ(s, Score::suppressed());
    EXPECT_NE(s, Score(0.0));
}

TEST(EotSuppress, RejectsMismatchedPositions) {
    const auto resp = response({pred(0, {{9, 0.4}, {1, 0.3}})});
    const auto other = response({pred(1, {{9, 0.4}, {1, 0.3}})});
    EXPECT_THROW(eot_suppress(top_probability(other), resp, kEot), ContractError);
}

TEST(Strategy, ParsesCliSpellings) {
    EXPECT_EQ(parse_strategy("top-prob"), Strategy::top_probability);
    EXPECT_EQ(parse_strategy("top_probability"), Strategy::top_probability);
    EXPECT_EQ(parse_strategy("top-margin"), Strategy::top_margin);
    EXPECT_EQ(parse_strategy("random"), Strategy::random);
    EXPECT_FALSE(parse_strategy("entropy"));
    EXPECT_EQ(to_string(Strategy::top_margin), "top_margin");
}
