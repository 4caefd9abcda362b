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
#include "sacm/error.hpp"
#include "sacm/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

namespace sacm {

/// Anchor-proximity modulation strength. Defaults are the GSM8K setting.
struct ModulationParams {
    double kappa = 14.0;  // spatial decay
    double beta = 1.3;    // strength
    double gamma = 0.85;  // relaxation exponent on (1 - progress)
    bool progress_dependent = true;

    void validate() const {
        if (!(kappa > 0.0) || !(beta > 0.0) || !(gamma > 0.0)) {
            throw ConfigError("modulation parameters kappa, beta and gamma must be positive");
        }
    }

    friend bool operator==(const ModulationParams&, const ModulationParams&) = default;
};

/// w_i for every response position; all zero when there are no anchors.
struct WeightField {
    std::vector<double> w;

    double operator[](Position i) const { return w[i]; }
    std::size_t size() const noexcept { return w.size(); }
};

/// w_i = min(1, beta * max_a exp(-|i - a| / kappa)).
inline WeightField compute_weights(std::size_t length, std::span<const Position> anchors,
                                   const ModulationParams& params) {
    params.validate();
    WeightField field{std::vector<double>(length, 0.0)};
    if (anchors.empty()) {
        return field;
    }
    for (auto a : anchors) {
        if (a >= length) {
            throw ContractError("anchor position " + std::to_string(a) + " outside response length " +
                                std::to_string(length));
        }
    }
    for (Position i = 0; i < length; ++i) {
        // exp is monotone, so the max over anchors is attained at the nearest one.
        std::size_t nearest = length;
        for (auto a : anchors) {
            nearest = std::min(nearest, i > a ? i - a : a - i);
        }
        const double decay = std::exp(-static_cast<double>(nearest) / params.kappa);
        field.w[i] = std::min(1.0, params.beta * decay);
    }
    return field;
}

/// Multiplicative factor applied to a base score at weight w and progress p.
inline double modulation_factor(double w, double p, const ModulationParams& params) {
    if (params.progress_dependent) {
        return 1.0 - w * std::pow(1.0 - p, params.gamma);
    }
    return 1.0 - w;
}

/// c~_i = c_i * (1 - w_i (1 - p)^gamma), or c_i * (1 - w_i) without progress
/// dependence. SUPPRESSED scores pass through.
inline ConfidenceVector modulate(ConfidenceVector conf, const WeightField& weights, double p,
                                 const ModulationParams& params) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ContractError("progress must lie in [0,1]");
    }
    for (std::size_t k = 0; k < conf.positions.size(); ++k) {
        auto& s = conf.scores[k];
        if (s.is_suppressed()) {
            continue;
        }
        const auto i = conf.positions[k];
        if (i >= weights.size()) {
            throw ContractError("position " + std::to_string(i) + " outside weight field");
        }
        s = Score(s.value() * modulation_factor(weights[i], p, params));
    }
    return conf;
}

} // namespace sacm
