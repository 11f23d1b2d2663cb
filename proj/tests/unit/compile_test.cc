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


#include "sbc/compile.h"

#include <cmath>

#include "gtest/gtest.h"

#include "sbc/gate.h"
#include "test_util.h"

using namespace sbc;

namespace {

int ceil_log2(int n) {
    int k = 0;
    while ((1 << k) < n) {
        k++;
    }
    return k;
}

void expect_complete_tree(const LayeredCircuit &c) {
    int depth = static_cast<int>(c.layers.size());
    ASSERT_EQ(static_cast<int>(c.lift_select.size()), 1 << depth);
    for (int l = 0; l < depth; l++) {
        ASSERT_EQ(static_cast<int>(c.layers[l].size()), 1 << (depth - l - 1));
        for (size_t i = 0; i < c.layers[l].size(); i++) {
            EXPECT_EQ(c.layers[l][i].left, static_cast<int>(2 * i));
            EXPECT_EQ(c.layers[l][i].right, static_cast<int>(2 * i + 1));
        }
    }
}

}  // namespace

TEST(compile, false_is_x1_and_not_x1) {
    auto tree = dnf_tree(TruthTable::zeros(2));
    EXPECT_EQ(tree.circuit.lift_select, (std::vector<int>{1, 3}));
    ASSERT_EQ(tree.circuit.layers.size(), 1u);
    EXPECT_EQ(tree.circuit.layers[0][0].gate, kGateAnd);
    EXPECT_EQ(circuit_table(tree.circuit), TruthTable::zeros(2));
    EXPECT_EQ(tree.report.gate_count, 1);
}

TEST(compile, xor_tree) {
    auto t = TruthTable(2, {0, 1, 1, 0});
    auto tree = dnf_tree(t);
    EXPECT_EQ(circuit_table(tree.circuit), t);
    // Terms ~x1 & x2 and x1 & ~x2 joined by one OR.
    EXPECT_EQ(tree.circuit.lift_select, (std::vector<int>{3, 2, 1, 4}));
    EXPECT_EQ(tree.report.b_up, 4);
    EXPECT_EQ(tree.report.depth, 2);
    EXPECT_LE(tree.report.b_up, 16);
    EXPECT_LE(tree.report.depth, 3);
}

TEST(compile, single_bit_functions_have_depth_one) {
    for (auto t : {TruthTable(1, {0, 1}), TruthTable(1, {1, 0}), TruthTable(1, {1, 1}), TruthTable(1, {0, 0})}) {
        auto tree = dnf_tree(t);
        EXPECT_EQ(tree.report.depth, 1);
        EXPECT_EQ(circuit_table(tree.circuit), t);
    }
}

TEST(compile, random_trees_reproduce_tables_within_bounds) {
    Rng rng(2024);
    for (int trial = 0; trial < 200; trial++) {
        int b = 1 + static_cast<int>(rng.below(4));
        auto t = sbc_test::random_table(rng, b);
        auto tree = dnf_tree(t);
        ASSERT_EQ(circuit_table(tree.circuit), t) << t.to_hex();
        expect_complete_tree(tree.circuit);
        EXPECT_EQ(tree.report.gate_count, tree.report.b_up - 1);
        EXPECT_LE(tree.report.b_up, 2 * b * (1 << b));
        EXPECT_LE(tree.report.depth, b + ceil_log2(b));
    }
}

TEST(compile, junta_reduce_examples) {
    auto dictator = enumerate_table([](std::span<const uint8_t> x) { return x[1]; }, 3);
    auto r = junta_reduce(dictator);
    EXPECT_EQ(r.relevant, (std::vector<int>{1}));
    EXPECT_EQ(r.reduced, TruthTable(1, {0, 1}));

    auto c = junta_reduce(TruthTable(3, std::vector<uint8_t>(8, 1)));
    EXPECT_TRUE(c.relevant.empty());
    EXPECT_EQ(c.reduced, TruthTable(1, {1, 1}));

    Rng rng(5);
    for (int trial = 0; trial < 20; trial++) {
        int i = static_cast<int>(rng.below(6));
        int j = static_cast<int>(rng.below(5));
        j += j >= i;
        // XOR, AND and OR-like gates depend on both arguments.
        int gate = std::array<int, 3>{kGateXor, kGateAnd, kGateNor}[rng.below(3)];
        auto t = enumerate_table([&](std::span<const uint8_t> x) { return gate_bit(gate, corner_index(x[i], x[j])); }, 6);
        auto red = junta_reduce(t);
        EXPECT_EQ(red.relevant, (std::vector<int>{std::min(i, j), std::max(i, j)}));
        for (uint64_t row = 0; row < t.size(); row++) {
            ASSERT_EQ(red.eval(input_bits(row, 6)), t[row]);
        }
    }
}

TEST(compile, junta_trees_are_small) {
    Rng rng(8);
    for (int b : {4, 8, 16}) {
        int s = ceil_log2(b);
        for (int trial = 0; trial < 3; trial++) {
            std::vector<int> idx;
            while (static_cast<int>(idx.size()) < s) {
                int k = static_cast<int>(rng.below(b));
                if (std::find(idx.begin(), idx.end(), k) == idx.end()) {
                    idx.push_back(k);
                }
            }
            auto inner = sbc_test::random_table(rng, s);
            auto t = enumerate_table(
                [&](std::span<const uint8_t> x) {
                    uint64_t k = 0;
                    for (int i : idx) {
                        k = (k << 1) | x[i];
                    }
                    return inner[k];
                },
                b);
            auto red = junta_reduce(t);
            EXPECT_LE(static_cast<int>(red.relevant.size()), s);
            auto tree = dnf_tree(red.reduced);
            int s_eff = red.reduced.num_bits();
            EXPECT_LE(tree.report.b_up, 2 * s_eff * (1 << s_eff));
        }
    }
}

TEST(compile, one_hot_failure_matches_softmax) {
    for (int n : {2, 5, 16}) {
        std::vector<double> z(n, 0.0);
        z[1] = 3.0;
        EXPECT_NEAR(one_hot_failure(3.0, n), 1 - softmax(z)[1], 1e-15);
    }
    EXPECT_EQ(one_hot_failure(0.0, 1), 0.0);
    EXPECT_NEAR(one_hot_failure(gate_eta_for_delta(0.01), kNumGates), 0.01, 1e-12);
}

TEST(compile, compiled_and_samples_and) {
    auto t = TruthTable(2, {0, 0, 0, 1});
    auto tree = dnf_tree(t);
    auto comp = compile_params(tree, 0.05);
    const auto &r = comp.report;
    EXPECT_GE(r.eta, std::log(15 / r.delta_per_component - 15) - 1e-12);
    EXPECT_NEAR(r.delta_per_component, 0.05 / std::max(2.0, std::pow(2.0, r.depth) - 1), 1e-15);
    EXPECT_GE(r.p_all_correct, 0.95);
    auto dec = decode_argmax(comp.params, comp.schedule);
    EXPECT_EQ(dec.circuit, tree.circuit);
    Rng rng(17);
    int n = 2000, hits = 0;
    for (int k = 0; k < n; k++) {
        hits += circuit_table(sample_circuit(comp.params, comp.schedule, rng)) == t;
    }
    double sigma = std::sqrt(0.95 * 0.05 / n);
    EXPECT_GE(hits / double(n), 0.95 - 3 * sigma);
}

TEST(compile, compiled_checkpoint_round_trips) {
    Rng rng(3);
    auto t = sbc_test::random_table(rng, 3);
    auto comp = compile_params(dnf_tree(t), 0.1);
    StackSchedule s;
    auto back = params_from_json(nlohmann::json::parse(params_to_json(comp.params, comp.schedule).dump()), &s);
    EXPECT_EQ(back.values, comp.params.values);
    EXPECT_EQ(circuit_table(decode_argmax(back, s).circuit), t);
}

TEST(compile, rejects_bad_inputs) {
    auto tree = dnf_tree(TruthTable(2, {0, 1, 1, 1}));
    EXPECT_THROW(compile_params(tree, 0.0), ConfigError);
    EXPECT_THROW(compile_params(tree, 1.5), ConfigError);
    EXPECT_NO_THROW(compile_params(tree, 1.0));
    LayeredCircuit c;
    c.num_input_bits = 2;
    c.width = 3;
    c.lift_select = {1, 2, 3};
    c.layers = {{{kGateAnd, 0, 1}, {kGateOr, 1, 2}}, {{kGateXor, 0, 1}}};
    EXPECT_THROW(compile_params(c, 0.1), ConfigError);
}

TEST(compile, junta_tree_reproduces_table) {
    Rng rng(21);
    for (int trial = 0; trial < 50; trial++) {
        int b = 2 + static_cast<int>(rng.below(5));
        // f depends on at most two of the b inputs.
        int i = static_cast<int>(rng.below(b));
        int j = static_cast<int>(rng.below(b));
        int g = 1 + static_cast<int>(rng.below(16));
        auto t = enumerate_table([&](std::span<const uint8_t> x) { return Gate(g)(x[i], x[j]); }, b);
        auto tree = compile_tree(t);
        EXPECT_EQ(circuit_table(tree.circuit), t);
        EXPECT_TRUE(validate_circuit(tree.circuit).ok());
        EXPECT_LE(tree.report.gate_count, dnf_tree(t).report.gate_count);
        EXPECT_LE(tree.report.gate_count, 7);
    }
}
