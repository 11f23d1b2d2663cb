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

#include "sbc/stochastic.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sbc {

uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng::Rng(uint64_t seed) : seed_(seed), engine_(mix64(seed)) {
}

Rng Rng::split(uint64_t key) const {
    return Rng(mix64(seed_ ^ mix64(key + 0x632be59bd9b4e019ULL)));
}

uint64_t Rng::next_u64() {
    return engine_();
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0;
    while (u1 <= 0) {
        u1 = uniform();
    }
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
}

uint64_t Rng::below(uint64_t n) {
    if (n == 0) {
        throw std::invalid_argument("Rng::below needs n > 0");
    }
    // Rejection sampling for an unbiased draw.
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return v % n;
}

int64_t Rng::between(int64_t lo, int64_t hi) {
    if (hi < lo) {
        throw std::invalid_argument("Rng::between needs lo <= hi");
    }
    return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
}

void softmax_into(std::span<const double> z, double scale, std::span<double> out) {
    double mx = -INFINITY;
    for (double v : z) {
        mx = std::max(mx, scale * v);
    }
    double total = 0;
    for (size_t i = 0; i < z.size(); i++) {
        out[i] = std::exp(scale * z[i] - mx);
        total += out[i];
    }
    for (size_t i = 0; i < z.size(); i++) {
        out[i] /= total;
    }
}

std::vector<double> softmax(std::span<const double> z, double scale) {
    std::vector<double> out(z.size());
    softmax_into(z, scale, out);
    return out;
}

std::vector<double> softmax_backward(std::span<const double> p, std::span<const double> dp) {
    double dot = 0;
    for (size_t i = 0; i < p.size(); i++) {
        dot += p[i] * dp[i];
    }
    std::vector<double> dz(p.size());
    for (size_t i = 0; i < p.size(); i++) {
        dz[i] = p[i] * (dp[i] - dot);
    }
    return dz;
}

int sample_categorical(std::span<const double> p, Rng &rng) {
    if (p.empty()) {
        throw std::invalid_argument("cannot sample from an empty distribution");
    }
    double total = 0;
    for (double v : p) {
        total += v;
    }
    double u = rng.uniform() * total;
    double acc = 0;
    for (size_t i = 0; i < p.size(); i++) {
        acc += p[i];
        if (u < acc) {
            return static_cast<int>(i);
        }
    }
    // Rounding left u at the top edge: return the last index with mass.
    for (size_t i = p.size(); i-- > 0;) {
        if (p[i] > 0) {
            return static_cast<int>(i);
        }
    }
    return static_cast<int>(p.size()) - 1;
}

LiftingWeights::LiftingWeights(int rows, int num_bits)
    : rows(rows), num_bits(num_bits), w(static_cast<size_t>(rows) * 2 * num_bits, 0.0) {
    if (rows < 1 || num_bits < 1) {
        throw std::invalid_argument("lifting weights need positive shape");
    }
}

std::span<const double> LiftingWeights::row(int r) const {
    return std::span<const double>(w).subspan(static_cast<size_t>(r) * 2 * num_bits, 2 * num_bits);
}

std::span<double> LiftingWeights::row(int r) {
    return std::span<double>(w).subspan(static_cast<size_t>(r) * 2 * num_bits, 2 * num_bits);
}

namespace {

void check_lift_input(std::span<const uint8_t> x, const LiftingWeights &lw) {
    if (static_cast<int>(x.size()) != lw.num_bits) {
        throw std::invalid_argument(
            "lifting expects " + std::to_string(lw.num_bits) + " bits, got " + std::to_string(x.size()));
    }
}

}  // namespace

std::vector<double> lift_mean(std::span<const uint8_t> x, const LiftingWeights &lw) {
    check_lift_input(x, lw);
    int b = lw.num_bits;
    std::vector<double> out(lw.rows);
    for (int r = 0; r < lw.rows; r++) {
        auto p = softmax(lw.row(r));
        double v = 0;
        for (int j = 0; j < b; j++) {
            v += p[j] * x[j] + p[j + b] * (1 - x[j]);
        }
        out[r] = v;
    }
    return out;
}

std::vector<int> lift_sample_select(const LiftingWeights &lw, Rng &rng) {
    std::vector<int> sel(lw.rows);
    for (int r = 0; r < lw.rows; r++) {
        sel[r] = sample_categorical(softmax(lw.row(r)), rng) + 1;
    }
    return sel;
}

std::vector<uint8_t> lift_sample(std::span<const uint8_t> x, const LiftingWeights &lw, Rng &rng) {
    check_lift_input(x, lw);
    auto sel = lift_sample_select(lw, rng);
    std::vector<uint8_t> out(sel.size());
    int b = lw.num_bits;
    for (size_t r = 0; r < sel.size(); r++) {
        int lit = sel[r];
        out[r] = lit <= b ? x[lit - 1] : static_cast<uint8_t>(x[lit - b - 1] ^ 1);
    }
    return out;
}

std::pair<std::vector<double>, std::vector<double>> edge_selector(
    std::span<const double> w1, std::span<const double> w2, double eta) {
    if (!(eta > 0)) {
        throw std::invalid_argument("edge selector temperature must be positive");
    }
    if (w1.size() != w2.size() || w1.empty()) {
        throw std::invalid_argument("edge selector weights must be non-empty and of equal length");
    }
    auto p1 = softmax(w1, eta);
    auto q = softmax(w2, eta);
    std::vector<double> z(q.size());
    for (size_t i = 0; i < q.size(); i++) {
        z[i] = (1 - p1[i]) * q[i];
    }
    auto p2 = softmax(z, eta);
    return {std::move(p1), std::move(p2)};
}

double edge_recovery_error(const std::pair<std::vector<double>, std::vector<double>> &p, int i, int j) {
    double err = 0;
    for (size_t k = 0; k < p.first.size(); k++) {
        err += std::abs(p.first[k] - (static_cast<int>(k) == i ? 1.0 : 0.0));
        err += std::abs(p.second[k] - (static_cast<int>(k) == j ? 1.0 : 0.0));
    }
    return err;
}

std::vector<uint8_t> edge_sample(std::span<const double> p, Rng &rng) {
    std::vector<uint8_t> out(p.size(), 0);
    out[sample_categorical(p, rng)] = 1;
    return out;
}

std::vector<double> gate_probs(std::span<const double> w_sigma) {
    if (w_sigma.size() != kNumGates) {
        throw std::invalid_argument("gate weights must have 16 entries");
    }
    return softmax(w_sigma);
}

Gate gate_sample(std::span<const double> w_sigma, Rng &rng) {
    return Gate(sample_categorical(gate_probs(w_sigma), rng) + 1);
}

double gate_tv_bound(double eta) {
    return 15.0 / (std::exp(eta) + 15.0);
}

double gate_eta_for_delta(double delta) {
    if (!(delta > 0 && delta < 1)) {
        throw std::invalid_argument("delta must lie in (0, 1)");
    }
    return std::log(15.0 / delta - 15.0);
}

}  // namespace sbc
