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


#ifndef SBC_COMPILE_H
#define SBC_COMPILE_H

#include <vector>

#include "json.hpp"
#include "sbc/circuit.h"
#include "sbc/stack.h"
#include "sbc/truth_table.h"

namespace sbc {

struct CompileReport {
    int b_up = 0;  // leaf count
    int depth = 0;
    int gate_count = 0;
    double eta = 0;
    double delta_target = 0;
    double delta_per_component = 0;
    /// Probability that every sampled choice equals the compiled one.
    double p_all_correct = 1;

    nlohmann::json to_json() const;
};

struct CompiledTree {
    LayeredCircuit circuit;
    CompileReport report;
};

/// Complete binary tree for the canonical DNF of `t`.
///
/// One balanced AND tree per satisfying row, a balanced OR tree over the
/// terms, and PROJ_A padding (with all-x1 padding subtrees) so every leaf
/// sits at depth exactly Delta. The constant FALSE is x1 AND ~x1. Delta is
/// at least 1. Layer k has 2^(Delta - k) nodes and node i of a layer reads
/// nodes 2i and 2i + 1 of the layer below.
CompiledTree dnf_tree(const TruthTable &t);

struct JuntaReduction {
    /// Relevant input indices (0-based), ascending.
    std::vector<int> relevant;
    /// f restricted to the relevant bits in the same order. A constant f
    /// gives an empty index set and a constant 1-bit table.
    TruthTable reduced;

    /// f_S(Pi(x)) for a full input x.
    uint8_t eval(std::span<const uint8_t> x) const;
};

JuntaReduction junta_reduce(const TruthTable &t);

/// dnf_tree of the junta-reduced table with leaves mapped back to the
/// original inputs.
CompiledTree junta_tree(const TruthTable &t);

/// The smaller of dnf_tree and junta_tree.
CompiledTree compile_tree(const TruthTable &t);

struct CompiledParams {
    StackParams params;
    StackSchedule schedule;
    CompileReport report;
};

/// Failure probability of softmax(eta e_i) over n categories.
double one_hot_failure(double eta, int n);

/// Stack parameters whose sampled circuits equal `tree` with probability
/// at least 1 - delta. Logits are eta times one-hot rows at the tree's
/// literals, parents, gates, and identity mixers, sampled at tau = 1.
///
/// eta starts at ln(15/delta' - 15) with delta' = delta / max(2, 2^Delta - 1)
/// and doubles until every component fails with probability at most delta'
/// and all components are jointly correct with probability >= 1 - delta.
/// Throws ConfigError unless 0 < delta <= 1 and `tree` has the layout that
/// dnf_tree produces.
CompiledParams compile_params(const CompiledTree &tree, double delta);
CompiledParams compile_params(const LayeredCircuit &tree, double delta);

}  // namespace sbc

#endif
