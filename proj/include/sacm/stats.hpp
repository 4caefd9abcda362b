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
#include "sacm/scheduler.hpp"
#include "sacm/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace sacm {

/// Fraction of response positions holding eot, anchor slots included.
inline double eot_ratio(std::span<const TokenId> tokens, TokenId eot) noexcept {
    if (tokens.empty()) {
        return 0.0;
    }
    const auto n = std::count(tokens.begin(), tokens.end(), eot);
    return static_cast<double>(n) / static_cast<double>(tokens.size());
}

struct PositionHistogram {
    static constexpr std::size_t kDefaultBins = 32;
    static constexpr double kDefaultEarlyFraction = 0.15;

    std::vector<double> bins; // fractions; sum to 1, or all 0 without early tokens
    std::size_t bin_count = kDefaultBins;
    double early_fraction = kDefaultEarlyFraction;
    std::size_t length = 0;
    std::set<std::size_t> anchor_bins;
    std::size_t early_tokens = 0; // summed over traces when averaged
    std::size_t traces = 0;       // traces contributing to the average

    double mass() const noexcept {
        double m = 0.0;
        for (double b : bins) {
            m += b;
        }
        return m;
    }

    double anchor_mass() const noexcept {
        double m = 0.0;
        for (auto b : anchor_bins) {
            m += bins[b];
        }
        return m;
    }

    /// Width of bin b; the last bin absorbs the remainder.
    std::size_t bin_width(std::size_t b) const noexcept {
        const std::size_t w = length / bin_count;
        return b + 1 == bin_count ? length - w * (bin_count - 1) : w;
    }

    /// Anchor-bin mass a position-uniform distribution would give.
    double uniform_anchor_mass() const noexcept {
        std::size_t width = 0;
        for (auto b : anchor_bins) {
            width += bin_width(b);
        }
        return length == 0 ? 0.0 : static_cast<double>(width) / static_cast<double>(length);
    }

    /// anchor_mass / uniform_anchor_mass; 0 when there are no anchor bins.
    double anchor_concentration() const noexcept {
        const double u = uniform_anchor_mass();
        return u > 0.0 ? anchor_mass() / u : 0.0;
    }
};

/// Bin index for a position; bins are L / bin_count wide with the last bin
/// absorbing any remainder.
inline std::size_t position_bin(Position i, std::size_t length, std::size_t bin_count) noexcept {
    const std::size_t w = length / bin_count;
    return std::min(i / w, bin_count - 1);
}

/// Number of steps counted as "early": ceil(early_fraction * T).
inline std::size_t early_step_count(std::size_t total_steps, double early_fraction) noexcept {
    // The epsilon keeps products like 0.15 * 20 = 3.0000000000000004 at 3.
    const double x = early_fraction * static_cast<double>(total_steps);
    return std::min(total_steps, static_cast<std::size_t>(std::ceil(x - 1e-9)));
}

inline PositionHistogram early_decode_histogram(const DecodeTrace& trace,
                                                std::size_t bin_count = PositionHistogram::kDefaultBins,
                                                double early_fraction = PositionHistogram::kDefaultEarlyFraction) {
    if (trace.steps.empty()) {
        throw ContractError("early_decode_histogram: trace has no steps");
    }
    const std::size_t length = trace.config.length;
    if (bin_count == 0 || bin_count > length) {
        throw ConfigError("bin count must lie in [1, L]");
    }
    if (!(early_fraction > 0.0 && early_fraction <= 1.0)) {
        throw ConfigError("early fraction must lie in (0, 1]");
    }
    PositionHistogram h;
    h.bin_count = bin_count;
    h.early_fraction = early_fraction;
    h.length = length;
    h.bins.assign(bin_count, 0.0);
    for (auto a : trace.anchor_positions) {
        h.anchor_bins.insert(position_bin(a, length, bin_count));
    }
    const auto early = early_step_count(trace.steps.size(), early_fraction);
    std::vector<std::size_t> counts(bin_count, 0);
    for (std::size_t s = 0; s < early; ++s) {
        for (auto i : trace.steps[s].selected) {
            ++counts[position_bin(i, length, bin_count)];
            ++h.early_tokens;
        }
    }
    if (h.early_tokens > 0) {
        for (std::size_t b = 0; b < bin_count; ++b) {
            h.bins[b] = static_cast<double>(counts[b]) / static_cast<double>(h.early_tokens);
        }
    }
    h.traces = 1;
    return h;
}

/// Averages per-trace fractions. Traces without early tokens are skipped.
inline PositionHistogram average_histograms(std::span<const PositionHistogram> hs) {
    if (hs.empty()) {
        throw ContractError("average_histograms: no histograms");
    }
    PositionHistogram out = hs.front();
    out.bins.assign(out.bin_count, 0.0);
    out.early_tokens = 0;
    out.traces = 0;
    out.anchor_bins.clear();
    for (const auto& h : hs) {
        if (h.bin_count != out.bin_count || h.length != out.length) {
            throw ContractError("average_histograms: incompatible histograms");
        }
        out.anchor_bins.insert(h.anchor_bins.begin(), h.anchor_bins.end());
        if (h.early_tokens == 0) {
            continue;
        }
        for (std::size_t b = 0; b < out.bin_count; ++b) {
            out.bins[b] += h.bins[b];
        }
        out.early_tokens += h.early_tokens;
        ++out.traces;
    }
    if (out.traces > 0) {
        for (auto& b : out.bins) {
            b /= static_cast<double>(out.traces);
        }
    }
    return out;
}

struct RunComparison {
    std::vector<int> decided_at_delta; // b - a, per position
    double eot_ratio_a = 0.0;
    double eot_ratio_b = 0.0;
    double eot_ratio_delta = 0.0;      // b - a
    std::vector<double> histogram_delta;

    bool all_zero() const noexcept {
        return eot_ratio_delta == 0.0 &&
               std::all_of(decided_at_delta.begin(), decided_at_delta.end(), [](int d) { return d == 0; }) &&
               std::all_of(histogram_delta.begin(), histogram_delta.end(), [](double d) { return d == 0.0; });
    }
};

inline RunComparison compare_runs(const DecodeTrace& a, const DecodeTrace& b,
                                  std::size_t bin_count = PositionHistogram::kDefaultBins,
                                  double early_fraction = PositionHistogram::kDefaultEarlyFraction) {
    if (a.config.length != b.config.length) {
        throw ContractError("compare_runs: traces have different lengths (" + std::to_string(a.config.length) +
                            " vs " + std::to_string(b.config.length) + ")");
    }
    RunComparison r;
    const auto da = a.decided_at();
    const auto db = b.decided_at();
    r.decided_at_delta.resize(da.size());
    for (std::size_t i = 0; i < da.size(); ++i) {
        r.decided_at_delta[i] = db[i] - da[i];
    }
    const auto ta = a.final_tokens();
    const auto tb = b.final_tokens();
    r.eot_ratio_a = eot_ratio(ta, a.vocab.eot_id);
    r.eot_ratio_b = eot_ratio(tb, b.vocab.eot_id);
    r.eot_ratio_delta = r.eot_ratio_b - r.eot_ratio_a;
    const auto ha = early_decode_histogram(a, bin_count, early_fraction);
    const auto hb = early_decode_histogram(b, bin_count, early_fraction);
    r.histogram_delta.resize(bin_count);
    for (std::size_t k = 0; k < bin_count; ++k) {
        r.histogram_delta[k] = hb.bins[k] - ha.bins[k];
    }
    return r;
}

} // namespace sacm
