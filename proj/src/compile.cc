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

#include <algorithm>
#include <cmath>
#include <memory>

#include "sbc/gate.h"
#include "sbc/stochastic.h"

namespace sbc {

nlohmann::json CompileReport::to_json() const {
    return {
        {"b_up", b_up},
        {"depth", depth},
        {"gate_count", gate_count},
        {"eta", eta},
        {"delta_target", delta_target},
        {"delta_per_component", delta_per_component},
        {"p_all_correct", p_all_correct},
    };
}

namespace {

struct TreeNode {
    int literal = 0;  // 1-based literal for leaves
    int gate = 0;
    std::shared_ptr<const TreeNode> left, right;
    int height = 0;
};
using NodePtr = std::shared_ptr<const TreeNode>;

NodePtr leaf(int literal) {
    return std::make_shared<const TreeNode>(TreeNode{literal, 0, nullptr, nullptr, 0});
}

NodePtr join(int gate, NodePtr l, NodePtr r) {
    int h = l->height + 1;
    return std::make_shared<const TreeNode>(TreeNode{0, gate, std::move(l), std::move(r), h});
}

NodePtr pad_tree(int height) {
    NodePtr n = leaf(1);
    for (int h = 0; h < height; h++) {
        n = join(kGateProjA, n, n);
    }
    return n;
}

// Balanced reduction with `gate`; an odd node out is lifted with PROJ_A.
NodePtr balanced(std::vector<NodePtr> level, int gate) {
    while (level.size() > 1) {
        std::vector<NodePtr> next;
        for (size_t i = 0; i + 1 < level.size(); i += 2) {
            next.push_back(join(gate, level[i], level[i + 1]));
        }
        if (level.size() % 2) {
            const auto &odd = level.back();
            next.push_back(join(kGateProjA, odd, pad_tree(odd->height)));
        }
        level = std::move(next);
    }
    return level.front();
}

}  // namespace

CompiledTree dnf_tree(const TruthTable &t) {
    int b = t.num_bits();
    if (b < 1) {
        throw std::invalid_argument("dnf_tree needs at least one input bit");
    }
    NodePtr root;
    if (t.count_ones() == 0) {
        root = join(kGateAnd, leaf(1), leaf(b + 1));
    } else {
        std::vector<NodePtr> terms;
        for (size_t r = 0; r < t.size(); r++) {
            if (!t[r]) {
                continue;
            }
            std::vector<NodePtr> lits;
            for (int j = 0; j < b; j++) {
                lits.push_back(leaf(input_bit(r, b, j) ? j + 1 : b + j + 1));
            }
            terms.push_back(balanced(std::move(lits), kGateAnd));
        }
        root = balanced(std::move(terms), kGateOr);
        if (root->height == 0) {
            root = join(kGateProjA, root, pad_tree(0));
        }
    }

    CompiledTree out;
    auto &c = out.circuit;
    c.num_input_bits = b;
    int depth = root->height;
    std::vector<std::vector<const TreeNode *>> levels(depth + 1);
    levels[depth].push_back(root.get());
    for (int h = depth; h > 0; h--) {
        for (const auto *n : levels[h]) {
            levels[h - 1].push_back(n->left.get());
            levels[h - 1].push_back(n->right.get());
        }
    }
    for (const auto *n : levels[0]) {
        c.lift_select.push_back(n->literal);
    }
    for (int h = 1; h <= depth; h++) {
        std::vector<CircuitNode> layer;
        for (size_t i = 0; i < levels[h].size(); i++) {
            layer.push_back({levels[h][i]->gate, static_cast<int>(2 * i), static_cast<int>(2 * i + 1)});
        }
        c.layers.push_back(std::move(layer));
    }
    c.width = static_cast<int>(c.lift_select.size());
    out.report.b_up = c.width;
    out.report.depth = depth;
    out.report.gate_count = static_cast<int>(c.gate_count());
    return out;
}

uint8_t JuntaReduction::eval(std::span<const uint8_t> x) const {
    uint64_t index = 0;
    for (int i : relevant) {
        index = (index << 1) | x[i];
    }
    return reduced[index];
}

JuntaReduction junta_reduce(const TruthTable &t) {
    int b = t.num_bits();
    std::vector<int> relevant;
    for (int j = 0; j < b; j++) {
        uint64_t mask = uint64_t{1} << (b - 1 - j);
        for (uint64_t r = 0; r < t.size(); r++) {
            if (t[r] != t[r ^ mask]) {
                relevant.push_back(j);
                break;
            }
        }
    }
    if (relevant.empty()) {
        return {{}, TruthTable(1, {t[0], t[0]})};
    }
    int s = static_cast<int>(relevant.size());
    std::vector<uint8_t> out(size_t{1} << s);
    for (uint64_t k = 0; k < out.size(); k++) {
        // Irrelevant bits are zero in the representative row.
        uint64_t row = 0;
        for (int i = 0; i < s; i++) {
            if (input_bit(k, s, i)) {
                row |= uint64_t{1} << (b - 1 - relevant[i]);
            }
        }
        out[k] = t[row];
    }
    return {std::move(relevant), TruthTable(s, std::move(out))};
}

CompiledTree junta_tree(const TruthTable &t) {
    auto red = junta_reduce(t);
    auto tree = dnf_tree(red.reduced);
    int b = t.num_bits();
    int s = red.reduced.num_bits();
    auto source = [&](int k) { return red.relevant.empty() ? 0 : red.relevant[k]; };
    for (int &lit : tree.circuit.lift_select) {
        lit = lit <= s ? source(lit - 1) + 1 : b + source(lit - s - 1) + 1;
    }
    tree.circuit.num_input_bits = b;
    return tree;
}

CompiledTree compile_tree(const TruthTable &t) {
    auto full = dnf_tree(t);
    auto small = junta_tree(t);
    return small.report.gate_count < full.report.gate_count ? small : full;
}

double one_hot_failure(double eta, int n) {
    if (n <= 1) {
        return 0.0;
    }
    return (n - 1) / (std::exp(eta) + (n - 1));
}

CompiledParams compile_params(const CompiledTree &tree, double delta) {
    return compile_params(tree.circuit, delta);
}

CompiledParams compile_params(const LayeredCircuit &tree, double delta) {
    if (!(delta > 0 && delta <= 1)) {
        throw ConfigError("delta must lie in (0, 1]");
    }
    auto check = validate_circuit(tree);
    if (!check.ok()) {
        throw CircuitError(std::move(check));
    }
    int depth = static_cast<int>(tree.layers.size());
    int b_up = static_cast<int>(tree.lift_select.size());
    if (depth < 1 || b_up != (1 << depth)) {
        throw ConfigError("compile_params needs a complete binary tree with 2^depth leaves");
    }
    for (int l = 0; l < depth; l++) {
        const auto &layer = tree.layers[l];
        if (static_cast<int>(layer.size()) != (b_up >> (l + 1))) {
            throw ConfigError("compile_params needs a complete binary tree");
        }
        for (size_t i = 0; i < layer.size(); i++) {
            if (layer[i].left != static_cast<int>(2 * i) || layer[i].right != static_cast<int>(2 * i + 1)) {
                throw ConfigError("compile_params needs children 2i and 2i + 1");
            }
        }
    }

    int b = tree.num_input_bits;
    StackConfig cfg;
    cfg.num_bits = b;
    cfg.use_lifting = true;
    cfg.lift_width = b_up;
    cfg.depth = depth;
    cfg.route = PairRoute::kLearned;
    cfg.repel = false;
    cfg.init_scale = 0;
    for (int l = 0; l < depth; l++) {
        cfg.tree_widths.push_back(b_up >> (l + 1));
    }
    cfg.heads = cfg.tree_widths.front();

    // (category count, multiplicity) of every sampled component.
    std::vector<std::pair<int, int>> components;
    components.push_back({2 * b, b_up});
    int n_in = b_up;
    for (int l = 0; l < depth; l++) {
        int w = cfg.tree_widths[l];
        components.push_back({kNumGates, w});
        components.push_back({n_in, 2 * w});
        components.push_back({w, w});
        n_in = w;
    }
    double delta_prime = delta / std::max(2.0, std::ldexp(1.0, depth) - 1);
    auto all_correct = [&](double eta) {
        double log_p = 0;
        for (auto [n, count] : components) {
            log_p += count * std::log1p(-one_hot_failure(eta, n));
        }
        return std::exp(log_p);
    };
    auto worst = [&](double eta) {
        double w = 0;
        for (auto [n, count] : components) {
            w = std::max(w, one_hot_failure(eta, n));
        }
        return w;
    };
    double eta = delta_prime < 1 ? std::max(1.0, gate_eta_for_delta(delta_prime)) : 1.0;
    while (worst(eta) > delta_prime || all_correct(eta) < 1 - delta) {
        eta *= 2;
    }

    CompiledParams out;
    out.params = allocate_params(cfg);
    auto &p = out.params;
    int lit_cols = 2 * b;
    for (int k = 0; k < b_up; k++) {
        p.values[p.lift + static_cast<long>(k) * lit_cols + tree.lift_select[k] - 1] = eta;
    }
    n_in = b_up;
    for (int l = 0; l < depth; l++) {
        const auto &lp = p.layers[l];
        int w = lp.shape.n_out;
        for (int h = 0; h < w; h++) {
            const auto &node = tree.layers[l][h];
            p.values[lp.pair_left + static_cast<long>(h) * n_in + node.left] = eta;
            p.values[lp.pair_right + static_cast<long>(h) * n_in + node.right] = eta;
            p.values[lp.gate + static_cast<long>(h) * kNumGates + node.gate - 1] = eta;
            p.values[lp.mixer + static_cast<long>(h) * w + h] = eta;
        }
        n_in = w;
    }
    out.schedule = StackSchedule::for_config(cfg, 1.0);
    auto &r = out.report;
    r.b_up = b_up;
    r.depth = depth;
    r.gate_count = static_cast<int>(tree.gate_count());
    r.eta = eta;
    r.delta_target = delta;
    r.delta_per_component = delta_prime;
    r.p_all_correct = all_correct(eta);
    return out;
}

}  // namespace sbc
