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


#ifndef SBC_TASKGEN_H
#define SBC_TASKGEN_H

#include <string>
#include <vector>

#include "json.hpp"
#include "sbc/expression.h"
#include "sbc/stochastic.h"
#include "sbc/truth_table.h"

namespace sbc {

/// Random sum-of-products generator knobs.
struct GenConfig {
    int bits_min = 4;
    int bits_max = 8;
    int count = 100;
    uint64_t seed = 0;
    int max_terms = 6;
    /// Largest conjunction arity; 0 means B.
    int max_arity = 0;
    /// Chance that a term of arity >= 2 is cut into two sub-conjunctions
    /// joined by XOR, IMPLIES or IFF.
    double p_macro = 0.3;

    /// Throws std::invalid_argument on an empty bit range or bad knobs.
    void validate() const;
    nlohmann::json to_json() const;
    /// Fields missing from `j` keep their defaults.
    static GenConfig from_json(const nlohmann::json &j);
};

struct TaskInstance {
    int id = 0;
    Expr formula = Expr::constant(false);
    int num_bits = 0;
    int s_base = 1;  // term count
    int l_base = 2;  // 2 + ceil(log2(max arity))
    TruthTable table;

    bool operator==(const TaskInstance &other) const;
};

/// One formula on `num_bits` bits: T terms (T uniform in [1, max_terms]),
/// each a conjunction of k distinct variables (k uniform in [1, max_arity])
/// with random polarities, joined by OR without simplification.
TaskInstance sample_formula(int num_bits, const GenConfig &config, Rng &rng);

/// Instance i uses Rng(config.seed).split(i) and a bit count uniform in
/// [bits_min, bits_max].
std::vector<TaskInstance> generate_dataset(const GenConfig &config);

enum class ScaleOp { kIdentity, kAdd, kMul };

struct ScaleRule {
    ScaleOp op = ScaleOp::kIdentity;
    int k = 0;
    int min = 1;
    int max = 1 << 20;

    static ScaleRule identity();
    static ScaleRule add(int k);
    static ScaleRule mul(int k);
    int apply(int base) const;
    nlohmann::json to_json() const;
    static ScaleRule from_json(const nlohmann::json &j);
};

/// (S_model, L_model) from the dataset proxies. L_model is clamped below
/// at 2.
std::pair<int, int> scale_shape(int s_base, int l_base, const ScaleRule &s_rule, const ScaleRule &l_rule);

class DatasetError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

nlohmann::json instance_to_json(const TaskInstance &inst);
/// Checks that the stored table matches the formula.
TaskInstance instance_from_json(const nlohmann::json &j);

/// JSONL with one instance per line.
void write_dataset(const std::vector<TaskInstance> &instances, const std::string &path);
/// Throws DatasetError naming the 1-based line of a malformed row.
std::vector<TaskInstance> read_dataset(const std::string &path);

}  // namespace sbc

#endif
