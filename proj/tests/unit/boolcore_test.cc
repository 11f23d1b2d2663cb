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

#include <random>
#include <set>

#include "gtest/gtest.h"

#include "sbc/circuit.h"
#include "sbc/expression.h"
#include "sbc/gate.h"
#include "sbc/truth_table.h"

using namespace sbc;

TEST(gate, table_rows) {
    EXPECT_EQ(gate_eval(Gate(kGateAnd), 1, 1), 1);
    EXPECT_EQ(gate_eval(Gate(kGateAnd), 1, 0), 0);
    EXPECT_EQ(gate_eval(Gate(kGateXor), 1, 0), 1);
    EXPECT_EQ(gate_eval(Gate(kGateXor), 1, 1), 0);
    for (int a = 0; a < 2; a++) {
        for (int b = 0; b < 2; b++) {
            EXPECT_EQ(gate_eval(Gate(kGateFalse), a, b), 0);
            EXPECT_EQ(gate_eval(Gate(kGateTrue), a, b), 1);
            EXPECT_EQ(gate_eval(Gate(kGateProjA), a, b), a);
            EXPECT_EQ(gate_eval(Gate(kGateProjB), a, b), b);
            EXPECT_EQ(gate_eval(Gate(kGateNotA), a, b), 1 - a);
            EXPECT_EQ(gate_eval(Gate(kGateNotB), a, b), 1 - b);
            EXPECT_EQ(gate_eval(Gate(kGateOr), a, b), a | b);
            EXPECT_EQ(gate_eval(Gate(kGateNor), a, b), 1 - (a | b));
            EXPECT_EQ(gate_eval(Gate(kGateXnor), a, b), a == b);
            EXPECT_EQ(gate_eval(Gate(kGateNand), a, b), 1 - (a & b));
            EXPECT_EQ(gate_eval(Gate(kGateAAndNotB), a, b), a & (1 - b));
            EXPECT_EQ(gate_eval(Gate(kGateNotAAndB), a, b), (1 - a) & b);
            EXPECT_EQ(gate_eval(Gate(kGateAOrNotB), a, b), a | (1 - b));
            EXPECT_EQ(gate_eval(Gate(kGateNotAOrB), a, b), (1 - a) | b);
        }
    }
}

TEST(gate, truth_vectors) {
    EXPECT_EQ(Gate(2).truth(), (std::array<uint8_t, 4>{0, 0, 0, 1}));
    EXPECT_EQ(Gate(7).truth(), (std::array<uint8_t, 4>{0, 1, 1, 0}));
    std::set<std::array<uint8_t, 4>> seen;
    for (int id = 1; id <= kNumGates; id++) {
        seen.insert(Gate(id).truth());
    }
    EXPECT_EQ(seen.size(), 16u);
}

TEST(gate, unary_embedding) {
    for (int a = 0; a < 2; a++) {
        for (int b = 0; b < 2; b++) {
            EXPECT_EQ(Gate(4)(a, b), a);
            EXPECT_EQ(Gate(13)(a, b), 1 - a);
        }
    }
}

TEST(gate, names_round_trip) {
    for (int id = 1; id <= kNumGates; id++) {
        EXPECT_EQ(gate_id_from_name(gate_name(id)), id);
    }
    EXPECT_EQ(gate_name(kGateProjA), "PROJ_A");
    EXPECT_THROW(Gate(0), std::out_of_range);
    EXPECT_THROW(Gate(17), std::out_of_range);
    EXPECT_THROW(gate_id_from_name("MAJ"), std::invalid_argument);
}

TEST(truth_table, enumerate) {
    auto t1 = enumerate_table([](std::span<const uint8_t> x) { return x[0]; }, 1);
    EXPECT_EQ(t1.outputs(), (std::vector<uint8_t>{0, 1}));
    auto t2 = enumerate_table([](std::span<const uint8_t> x) { return uint8_t(x[0] & x[1]); }, 2);
    EXPECT_EQ(t2.outputs(), (std::vector<uint8_t>{0, 0, 0, 1}));
    auto t3 = enumerate_table([](std::span<const uint8_t> x) { return uint8_t(x[0] ^ x[1] ^ x[2]); }, 3);
    EXPECT_EQ(t3.outputs(), (std::vector<uint8_t>{0, 1, 1, 0, 1, 0, 0, 1}));
    EXPECT_EQ(t3.to_hex(), "69");
    EXPECT_EQ(TruthTable::from_hex(3, "69"), t3);
}

TEST(truth_table, big_endian_rows) {
    EXPECT_EQ(input_bits(4, 3), (std::vector<uint8_t>{1, 0, 0}));
    EXPECT_EQ(input_bits(1, 3), (std::vector<uint8_t>{0, 0, 1}));
}

TEST(truth_table, guards) {
    auto f = [](std::span<const uint8_t>) { return uint8_t{0}; };
    EXPECT_THROW(enumerate_table(f, 21), std::length_error);
    EXPECT_THROW(enumerate_table(f, 0), std::invalid_argument);
    EXPECT_THROW(TruthTable(2, {0, 1, 0}), std::invalid_argument);
    EXPECT_THROW(TruthTable(1, {0, 2}), std::invalid_argument);
    EXPECT_THROW(TruthTable::from_hex(3, "6"), std::invalid_argument);
    EXPECT_THROW(TruthTable::from_hex(1, "f"), std::invalid_argument);
    EXPECT_THROW(TruthTable::from_hex(3, "6g"), std::invalid_argument);
}

TEST(truth_table, hex_round_trip_small) {
    TruthTable t(1, {0, 1});
    EXPECT_EQ(t.to_hex(), "4");
    EXPECT_EQ(TruthTable::from_hex(1, "4"), t);
    TruthTable t2(2, {1, 0, 0, 1});
    EXPECT_EQ(t2.to_hex(), "9");
}

namespace {

LayeredCircuit random_circuit(std::mt19937_64 &rng, int b) {
    LayeredCircuit c;
    c.num_input_bits = b;
    int w0 = 1 + static_cast<int>(rng() % 4);
    for (int k = 0; k < w0; k++) {
        c.lift_select.push_back(1 + static_cast<int>(rng() % (2 * b)));
    }
    int num_layers = 1 + static_cast<int>(rng() % 3);
    int prev = w0;
    for (int l = 0; l < num_layers; l++) {
        int w = l + 1 == num_layers ? 1 : 1 + static_cast<int>(rng() % 4);
        std::vector<CircuitNode> layer;
        for (int k = 0; k < w; k++) {
            layer.push_back(
                {1 + static_cast<int>(rng() % 16), static_cast<int>(rng() % prev), static_cast<int>(rng() % prev)});
        }
        c.layers.push_back(layer);
        prev = w;
    }
    c.width = 4;
    return c;
}

// Independent node-by-node simulator using explicit truth-table lookups.
uint8_t simulate(const LayeredCircuit &c, const std::vector<uint8_t> &x) {
    static const uint8_t kTable[16][4] = {
        {0, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}, {0, 0, 1, 1}, {0, 1, 0, 0}, {0, 1, 0, 1}, {0, 1, 1, 0}, {0, 1, 1, 1},
        {1, 0, 0, 0}, {1, 0, 0, 1}, {1, 0, 1, 0}, {1, 0, 1, 1}, {1, 1, 0, 0}, {1, 1, 0, 1}, {1, 1, 1, 0}, {1, 1, 1, 1},
    };
    int b = c.num_input_bits;
    std::vector<uint8_t> v;
    for (int lit : c.lift_select) {
        v.push_back(lit <= b ? x[lit - 1] : !x[lit - b - 1]);
    }
    for (const auto &layer : c.layers) {
        std::vector<uint8_t> next;
        for (const auto &n : layer) {
            next.push_back(kTable[n.gate - 1][v[n.left] * 2 + v[n.right]]);
        }
        v = next;
    }
    return v[0];
}

}  // namespace

TEST(circuit, eval_examples) {
    LayeredCircuit proj{2, 2, {1, 2}, {{{kGateProjA, 0, 1}}}};
    EXPECT_EQ(circuit_eval(proj, std::vector<uint8_t>{1, 0}), 1);
    EXPECT_EQ(circuit_eval(proj, std::vector<uint8_t>{0, 1}), 0);

    LayeredCircuit c{2, 2, {1, 4}, {{{kGateAnd, 0, 1}}}};
    EXPECT_EQ(circuit_eval(c, std::vector<uint8_t>{1, 0}), 1);
    EXPECT_EQ(circuit_table(c).outputs(), (std::vector<uint8_t>{0, 0, 1, 0}));
}

TEST(circuit, eval_matches_independent_simulator) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; trial++) {
        int b = 1 + static_cast<int>(rng() % 4);
        auto c = random_circuit(rng, b);
        ASSERT_TRUE(validate_circuit(c).ok()) << validate_circuit(c).str();
        auto table = circuit_table(c);
        for (size_t i = 0; i < table.size(); i++) {
            ASSERT_EQ(table[i], simulate(c, input_bits(i, b)));
        }
        auto e = circuit_expression(c);
        EXPECT_EQ(expression_table(e, b), table);
    }
}

TEST(circuit, validation_collects_everything) {
    LayeredCircuit c{2, 2, {1, 5}, {{{17, 0, 3}, {2, 0, 1}}}};
    auto report = validate_circuit(c);
    ASSERT_FALSE(report.ok());
    std::string s = report.str();
    EXPECT_NE(s.find("lift index out of range"), std::string::npos);
    EXPECT_NE(s.find("gate id out of range"), std::string::npos);
    EXPECT_NE(s.find("parent out of range"), std::string::npos);
    EXPECT_NE(s.find("wrong final width"), std::string::npos);
    EXPECT_EQ(report.violations.size(), 4u);
    EXPECT_THROW(circuit_eval(c, std::vector<uint8_t>{0, 0}), CircuitError);

    LayeredCircuit wide{1, 1, {1, 2}, {{{2, 0, 1}}}};
    EXPECT_NE(validate_circuit(wide).str().find("exceeds declared width"), std::string::npos);

    LayeredCircuit ok{2, 2, {1, 2}, {{{2, 0, 1}}}};
    EXPECT_THROW(circuit_eval(ok, std::vector<uint8_t>{0}), std::invalid_argument);
}

TEST(circuit, json_round_trip) {
    LayeredCircuit c{3, 2, {1, 6}, {{{kGateXor, 0, 1}}}};
    auto j = circuit_to_json(c);
    EXPECT_EQ(circuit_from_json(j), c);
    j.erase("width");
    EXPECT_EQ(circuit_from_json(j).width, 2);
}

TEST(expression, render_and_tokens) {
    auto e = Expr::apply(kGateAnd, Expr::var(0), Expr::negate(Expr::var(1)));
    EXPECT_EQ(render(e), "(x1 & ~x2)");
    EXPECT_EQ(expr_tokens(e), 4);
    EXPECT_EQ(expr_tokens(Expr::var(0)), 1);
    auto g3 = Expr::apply(kGateAAndNotB, Expr::var(0), Expr::var(1));
    EXPECT_EQ(render(g3), "(x1 & ~x2)");
    EXPECT_EQ(expr_tokens(g3), 4);
    auto proj = Expr::apply(kGateProjA, Expr::var(2), Expr::var(0));
    EXPECT_EQ(render(proj), "x3");
    EXPECT_EQ(expr_tokens(proj), 1);
}

namespace {

// Token count of a rendered string, computed from the text alone.
int count_rendered_tokens(const std::string &s) {
    int n = 0;
    for (size_t i = 0; i < s.size(); i++) {
        char ch = s[i];
        if (ch == 'x') {
            n++;
            while (i + 1 < s.size() && isdigit(static_cast<unsigned char>(s[i + 1]))) {
                i++;
            }
        } else if (ch == '~' || ch == '&' || ch == '|' || ch == '^' || ch == '0' || ch == '1') {
            n++;
        } else if (ch == '<') {
            n++;
            i += 2;
        }
    }
    return n;
}

}  // namespace

TEST(expression, tokens_match_text_walk) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; trial++) {
        int b = 1 + static_cast<int>(rng() % 4);
        auto c = random_circuit(rng, b);
        auto e = circuit_expression(c);
        std::string s = render(e);
        EXPECT_EQ(expr_tokens(e), count_rendered_tokens(s)) << s;
        auto parsed = parse_expression(s);
        EXPECT_EQ(expression_table(parsed, b), expression_table(e, b)) << s;
    }
}

TEST(expression, parser) {
    auto e = parse_expression("(x1 & x2) | ~x3");
    EXPECT_EQ(expression_table(e, 3).outputs(), (std::vector<uint8_t>{1, 0, 1, 0, 1, 0, 1, 1}));
    auto imp = parse_expression("x1 -> x2 -> x1");
    EXPECT_EQ(expression_table(imp, 2).outputs(), (std::vector<uint8_t>{1, 1, 1, 1}));
    auto iff = parse_expression("x1 <-> !x2");
    EXPECT_EQ(expression_table(iff, 2).outputs(), (std::vector<uint8_t>{0, 1, 1, 0}));
    EXPECT_THROW(parse_expression("x1 &"), ExprParseError);
    EXPECT_THROW(parse_expression("(x1"), ExprParseError);
    EXPECT_THROW(parse_expression("x0"), ExprParseError);
    EXPECT_THROW(parse_expression("y1"), ExprParseError);
    EXPECT_THROW(expression_table(parse_expression("x4"), 3), std::invalid_argument);
}

TEST(expression, json_round_trip) {
    auto e = parse_expression("(x1 ^ ~x3) | 1");
    auto j = expr_to_json(e);
    EXPECT_EQ(expr_from_json(j), e);
    EXPECT_THROW(expr_from_json(nlohmann::json::parse(R"({"foo":1})")), std::invalid_argument);
}
