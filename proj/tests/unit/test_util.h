// Copyright 2026 The SBC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SBC_TEST_UTIL_H
#define SBC_TEST_UTIL_H

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "sbc/stochastic.h"
#include "sbc/truth_table.h"

namespace sbc_test {

inline sbc::TruthTable random_table(sbc::Rng &rng, int b) {
    std::vector<uint8_t> out(size_t{1} << b);
    for (auto &v : out) {
        v = static_cast<uint8_t>(rng.below(2));
    }
    return sbc::TruthTable(b, out);
}

/// Largest |a - f| / max(|a|, |f|, floor) over all coordinates, where f is
/// the central difference of `loss` at step h.
inline double max_rel_fd_error(
    std::vector<double> &x, const std::vector<double> &analytic, const std::function<double()> &loss, double h = 1e-5,
    double floor = 1e-6) {
    double worst = 0;
    for (size_t i = 0; i < x.size(); i++) {
        double old = x[i];
        x[i] = old + h;
        double fp = loss();
        x[i] = old - h;
        double fm = loss();
        x[i] = old;
        double fd = (fp - fm) / (2 * h);
        double denom = std::max({std::abs(fd), std::abs(analytic[i]), floor});
        worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
    }
    return worst;
}

}  // namespace sbc_test

#endif
