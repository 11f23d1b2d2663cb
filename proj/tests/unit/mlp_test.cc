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

#include "sbc/mlp.h"

#include <cmath>

#include "gtest/gtest.h"

#include "test_util.h"

using namespace sbc;

TEST(mlp, param_count_formula) {
    EXPECT_EQ(mlp_param_count(3, 4, 1), 4u * 4 + 5);
    EXPECT_EQ(mlp_param_count(5, 12, 3), 6u * 12 + 2 * 13 * 12 + 13);
    for (int h = 1; h < 50; h++) {
        EXPECT_LT(mlp_param_count(6, h, 3), mlp_param_count(6, h + 1, 3));
    }
}

TEST(mlp, match_width_neuron) {
    StackConfig s;
    s.num_bits = 6;
    s.heads = 12;
    s.depth = 3;
    auto m = match_width(MatchRegime::kNeuron, s, 0, 0);
    EXPECT_EQ(m.config.width, 12);
    EXPECT_EQ(m.config.depth, 3);
    EXPECT_EQ(m.config.input_dim, 6);
    EXPECT_FALSE(m.floored);
}

TEST(mlp, match_width_budget) {
    StackConfig s;
    s.num_bits = 7;
    s.heads = 5;
    s.depth = 4;
    size_t trainable = allocate_params(s).trainable_count();
    size_t prims = primitive_count(s);
    EXPECT_EQ(prims, 16u * 5 * 4);
    for (auto [regime, budget] :
         {std::pair{MatchRegime::kParamSoft, trainable}, std::pair{MatchRegime::kParamTotal, trainable + prims}}) {
        auto m = match_width(regime, s, trainable, prims);
        int h = m.config.width;
        EXPECT_EQ(m.config.depth, 4);
        EXPECT_LE(mlp_param_count(7, h, 4), budget);
        EXPECT_GT(mlp_param_count(7, h + 1, 4), budget);
    }
    auto tiny = match_width(MatchRegime::kParamSoft, s, 3, prims);
    EXPECT_TRUE(tiny.floored);
    EXPECT_EQ(tiny.config.width, 1);
}

TEST(mlp, gradient_matches_finite_differences) {
    Rng rng(11);
    for (int depth : {1, 2, 3}) {
        MlpConfig c{4, 5, depth, MatchRegime::kNeuron};
        auto params = mlp_init(c, rng);
        auto table = sbc_test::random_table(rng, 4);
        auto analytic = mlp_loss(params, table).grad;
        double err = sbc_test::max_rel_fd_error(params.values, analytic, [&] { return mlp_loss(params, table).bce; });
        EXPECT_LE(err, 1e-4) << "depth " << depth;
    }
}

TEST(mlp, init_bounds) {
    Rng rng(3);
    MlpConfig c{6, 8, 2, MatchRegime::kNeuron};
    auto p = mlp_init(c, rng);
    EXPECT_EQ(p.values.size(), mlp_param_count(6, 8, 2));
    for (int l = 0; l <= c.depth; l++) {
        double bound = 1.0 / std::sqrt(p.layer_in(l));
        size_t n = static_cast<size_t>(p.layer_in(l)) * p.layer_out(l);
        for (size_t i = 0; i < n; i++) {
            EXPECT_LE(std::abs(p.values[p.weight_offset(l) + i]), bound);
        }
    }
}

TEST(mlp, forward_shapes) {
    Rng rng(5);
    MlpConfig c{3, 7, 2, MatchRegime::kNeuron};
    auto f = mlp_forward_cube(mlp_init(c, rng));
    ASSERT_EQ(f.activations.size(), 2u);
    for (const auto &a : f.activations) {
        EXPECT_EQ(a.size(), 8u * 7);
        for (double v : a) {
            EXPECT_GE(v, 0.0);
        }
    }
    for (size_t r = 0; r < 8; r++) {
        EXPECT_NEAR(f.predictions[r], 1 / (1 + std::exp(-f.logits[r])), 1e-15);
    }
}

TEST(mlp, learns_dictator) {
    auto table = enumerate_table([](std::span<const uint8_t> x) { return x[0]; }, 4);
    TrainConfig t;
    t.learning_rate = 0.01;
    for (uint64_t seed = 0; seed < 3; seed++) {
        t.seed = seed;
        auto r = mlp_train(table, MlpConfig{4, 4, 2, MatchRegime::kNeuron}, t);
        EXPECT_EQ(r.em, 1.0);
        EXPECT_LE(r.steps, 1000);
        EXPECT_EQ(r.activations.size(), 2u);
    }
}

TEST(mlp, deterministic_and_round_trip) {
    Rng rng(9);
    auto table = sbc_test::random_table(rng, 4);
    TrainConfig t;
    t.max_steps = 300;
    t.seed = 4;
    MlpConfig c{4, 6, 2, MatchRegime::kParamSoft};
    auto a = mlp_train(table, c, t);
    auto b = mlp_train(table, c, t);
    EXPECT_EQ(a.params.values, b.params.values);
    auto back = mlp_params_from_json(mlp_params_to_json(a.params));
    EXPECT_EQ(back.values, a.params.values);
    EXPECT_EQ(back.config.regime, MatchRegime::kParamSoft);
}

namespace {

// At least three distinct values among {0, ReLU(a_i)} iff at least two
// weights are positive: rate 1 - (B + 1) / 2^B.
double relu_oracle(int b) {
    return 1.0 - (b + 1) / std::pow(2.0, b);
}

}  // namespace

TEST(mlp, relu_bnr_failure_rates) {
    int trials = 10000;
    for (int b : {3, 10}) {
        Rng rng(100 + b);
        double rate = relu_bnr_failure_trial(b, trials, rng);
        double p = relu_oracle(b);
        double sigma = std::sqrt(p * (1 - p) / trials);
        EXPECT_NEAR(rate, p, 4 * sigma) << "B=" << b;
        double bound = 1.0 - (b + 2) / std::pow(2.0, b);
        EXPECT_GE(rate, bound - 3 * sigma) << "B=" << b;
    }
    Rng rng(1);
    EXPECT_THROW(relu_bnr_failure_trial(2, 10, rng), std::invalid_argument);
}
