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

#ifndef SBC_STOCHASTIC_H
#define SBC_STOCHASTIC_H

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "sbc/gate.h"

namespace sbc {

/// Seeded 64-bit random stream. Child streams derived with `split` are
/// independent of the parent's position, so a model instance can own its
/// stream regardless of how many draws were made elsewhere.
class Rng {
   public:
    explicit Rng(uint64_t seed = 0);

    uint64_t seed() const {
        return seed_;
    }

    /// Child stream keyed by (this seed, key).
    Rng split(uint64_t key) const;

    uint64_t next_u64();
    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform();
    /// Standard normal (Box-Muller).
    double normal();
    /// Uniform integer in [0, n).
    uint64_t below(uint64_t n);
    /// Uniform integer in [lo, hi].
    int64_t between(int64_t lo, int64_t hi);

   private:
    uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0;
};

/// SplitMix64 finalizer.
uint64_t mix64(uint64_t x);

/// Numerically stable softmax of scale * z.
std::vector<double> softmax(std::span<const double> z, double scale = 1.0);
void softmax_into(std::span<const double> z, double scale, std::span<double> out);

/// Given p = softmax(z) and dL/dp, returns dL/dz.
std::vector<double> softmax_backward(std::span<const double> p, std::span<const double> dp);

/// Draws an index with probabilities p (need not be exactly normalized).
int sample_categorical(std::span<const double> p, Rng &rng);

/// Row logits of a bit-lifting channel: `rows` output wires, each a
/// distribution over 2B literals (x_1..x_B, then NOT x_1..NOT x_B).
struct LiftingWeights {
    int rows = 0;
    int num_bits = 0;
    std::vector<double> w;  // rows x 2B, row-major

    LiftingWeights() = default;
    LiftingWeights(int rows, int num_bits);
    std::span<const double> row(int r) const;
    std::span<double> row(int r);
};

/// Expected lifted vector: row-softmax(w) applied to (x, 1 - x).
std::vector<double> lift_mean(std::span<const uint8_t> x, const LiftingWeights &lw);

/// Draws one literal index per row, 1-based in [1, 2B].
std::vector<int> lift_sample_select(const LiftingWeights &lw, Rng &rng);

/// Draws a lifted bit vector; always Boolean.
std::vector<uint8_t> lift_sample(std::span<const uint8_t> x, const LiftingWeights &lw, Rng &rng);

/// Coupled edge selector: p1 = softmax(eta w1),
/// p2 = softmax(eta (1 - p1) * softmax(eta w2)).
std::pair<std::vector<double>, std::vector<double>> edge_selector(
    std::span<const double> w1, std::span<const double> w2, double eta);

/// L1 distance between (p1, p2) and (e_i, e_j).
double edge_recovery_error(const std::pair<std::vector<double>, std::vector<double>> &p, int i, int j);

/// One-hot categorical draw.
std::vector<uint8_t> edge_sample(std::span<const double> p, Rng &rng);

std::vector<double> gate_probs(std::span<const double> w_sigma);
Gate gate_sample(std::span<const double> w_sigma, Rng &rng);

/// Total variation distance between softmax(eta e_i) over 16 gates and the
/// point mass at gate i: 15 / (e^eta + 15).
double gate_tv_bound(double eta);

/// Smallest eta with gate_tv_bound(eta) <= delta, i.e. ln(15/delta - 15).
/// Throws std::invalid_argument unless 0 < delta < 1.
double gate_eta_for_delta(double delta);

}  // namespace sbc

#endif
