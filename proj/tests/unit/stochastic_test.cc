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

#include <cmath>

#include "gtest/gtest.h"

using namespace sbc;

TEST(rng, deterministic_and_split) {
    Rng a(5), b(5);
    for (int k = 0; k < 10; k++) {
        ASSERT_EQ(a.next_u64(), b.next_u64());
    }
    Rng c(5);
    c.next_u64();
    EXPECT_EQ(Rng(5).split(3).next_u64(), c.split(3).next_u64());
    EXPECT_NE(Rng(5).split(3).next_u64(), Rng(5).split(4).next_u64());
    Rng d(9);
    for (int k = 0; k < 1000; k++) {
        double u = d.uniform();
        ASSERT_TRUE(u >= 0 && u < 1);
        auto v = d.between(-2, 2);
        ASSERT_TRUE(v >= -2 && v <= 2);
    }
}

TEST(softmax, stable_and_backward) {
    std::vector<double> z{1000, 1001, 999};
    auto p = softmax(z);
    EXPECT_NEAR(p[0] + p[1] + p[2], 1, 1e-15);
    EXPECT_GT(p[1], p[0]);
    std::vector<double> w{0.3, -0.2, 0.7, 0.1};
    std::vector<double> dp{0.5, -1, 2, 0.25};
    auto q = softmax(w);
    auto dz = softmax_backward(q, dp);
    const double h = 1e-6;
    for (size_t i = 0; i < w.size(); i++) {
        auto wp = w, wm = w;
        wp[i] += h;
        wm[i] -= h;
        auto qp = softmax(wp), qm = softmax(wm);
        double fd = 0;
        for (size_t k = 0; k < w.size(); k++) {
            fd += dp[k] * (qp[k] - qm[k]) / (2 * h);
        }
        EXPECT_NEAR(dz[i], fd, 1e-8);
    }
}

TEST(lifting, mean_examples) {
    LiftingWeights lw(2, 2);
    auto m = lift_mean(std::vector<uint8_t>{1, 0}, lw);
    EXPECT_DOUBLE_EQ(m[0], 0.5);
    EXPECT_DOUBLE_EQ(m[1], 0.5);
    lw.row(0)[0] = 30;
    auto m2 = lift_mean(std::vector<uint8_t>{1, 0}, lw);
    EXPECT_GT(m2[0], 1 - 1e-12);
    EXPECT_THROW(lift_mean(std::vector<uint8_t>{1}, lw), std::invalid_argument);
}

TEST(lifting, sample_is_boolean_and_matches_mean) {
    Rng rng(11);
    LiftingWeights lw(3, 3);
    for (auto &v : lw.w) {
        v = rng.normal();
    }
    std::vector<uint8_t> x{1, 0, 1};
    auto mean = lift_mean(x, lw);
    const int n = 100000;
    std::vector<int> counts(3, 0);
    for (int k = 0; k < n; k++) {
        auto s = lift_sample(x, lw, rng);
        for (int r = 0; r < 3; r++) {
            ASSERT_LE(s[r], 1);
            counts[r] += s[r];
        }
    }
    for (int r = 0; r < 3; r++) {
        double sigma = std::sqrt(mean[r] * (1 - mean[r]) / n);
        EXPECT_NEAR(counts[r] / double(n), mean[r], 3 * sigma + 1e-12);
    }
}

TEST(lifting, deterministic_limit_negation) {
    Rng rng(2);
    LiftingWeights lw(1, 3);
    lw.row(0)[3] = 50;
    int zeros = 0;
    for (int k = 0; k < 10000; k++) {
        zeros += lift_sample(std::vector<uint8_t>{1, 1, 0}, lw, rng)[0] == 0;
    }
    EXPECT_GE(zeros / 10000.0, 0.999);
}

TEST(lifting, one_hot_counts) {
    // A one-hot W with repeated columns reproduces column multiplicities.
    Rng rng(4);
    LiftingWeights lw(4, 2);
    int cols[4] = {0, 0, 3, 1};
    double eta = 40;
    for (int r = 0; r < 4; r++) {
        lw.row(r)[cols[r]] = eta;
    }
    int good = 0;
    for (int k = 0; k < 1000; k++) {
        auto sel = lift_sample_select(lw, rng);
        std::vector<int> hist(4, 0);
        for (int s : sel) {
            hist[s - 1]++;
        }
        good += hist == std::vector<int>{2, 1, 0, 1};
    }
    EXPECT_GE(good, 999);
}

TEST(edge_selector, symmetric_and_positive) {
    std::vector<double> z(5, 0.0);
    auto [p1, p2] = edge_selector(z, z, 3.0);
    for (int i = 0; i < 5; i++) {
        EXPECT_NEAR(p1[i], 0.2, 1e-15);
        EXPECT_NEAR(p2[i], 0.2, 1e-15);
    }
    EXPECT_THROW(edge_selector(z, z, 0.0), std::invalid_argument);
}

TEST(edge_selector, recovery_and_no_doubled_edges) {
    for (int n : {2, 4, 8}) {
        for (int i = 0; i < n; i++) {
            for (int j = 0; j < n; j++) {
                if (i == j) {
                    continue;
                }
                std::vector<double> w1(n, 0), w2(n, 0);
                w1[i] = 1;
                w2[j] = 1;
                double prev = INFINITY;
                for (double eta = 1; eta <= 64; eta *= 2) {
                    double err = edge_recovery_error(edge_selector(w1, w2, eta), i, j);
                    EXPECT_LT(err, prev);
                    prev = err;
                }
                EXPECT_LT(prev, 0.05);
            }
        }
    }
    std::vector<double> w1{1, 0, 0}, w2{0.2, 0.9, 0.1};
    auto p = edge_selector(w1, w2, 60);
    EXPECT_LT(p.second[0], 1e-6);
}

TEST(edge_sample, frequencies) {
    Rng rng(8);
    std::vector<double> e3{0, 0, 1, 0};
    for (int k = 0; k < 100; k++) {
        EXPECT_EQ(edge_sample(e3, rng), (std::vector<uint8_t>{0, 0, 1, 0}));
    }
    std::vector<double> u(4, 0.25);
    std::vector<int> counts(4, 0);
    for (int k = 0; k < 10000; k++) {
        auto s = edge_sample(u, rng);
        for (int i = 0; i < 4; i++) {
            counts[i] += s[i];
        }
    }
    double chi2 = 0;
    for (int c : counts) {
        chi2 += (c - 2500.0) * (c - 2500.0) / 2500.0;
    }
    EXPECT_LT(chi2, 11.345);  // chi-square 0.99 quantile, 3 dof
}

TEST(gate_selector, tv_law) {
    double eta = gate_eta_for_delta(0.1);
    EXPECT_NEAR(eta, std::log(135.0), 1e-12);
    EXPECT_NEAR(gate_tv_bound(eta), 0.1, 1e-12);
    Rng rng(12);
    for (double delta : {0.5, 0.1, 0.01}) {
        int i = static_cast<int>(rng.below(16));
        std::vector<double> w(16, 0);
        w[i] = gate_eta_for_delta(delta);
        auto p = gate_probs(w);
        EXPECT_NEAR(p[i], 1 - delta, 1e-12);
        const int n = 100000;
        int hits = 0;
        for (int k = 0; k < n; k++) {
            hits += gate_sample(w, rng).id() == i + 1;
        }
        double sigma = std::sqrt(delta * (1 - delta) / n);
        EXPECT_NEAR(hits / double(n), 1 - delta, 3 * sigma);
    }
    EXPECT_THROW(gate_eta_for_delta(1.0), std::invalid_argument);
    std::vector<double> zero(16, 0);
    for (double v : gate_probs(zero)) {
        EXPECT_DOUBLE_EQ(v, 1.0 / 16);
    }
}
