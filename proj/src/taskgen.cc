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


#include "sbc/taskgen.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "sbc/gate.h"

namespace sbc {

void GenConfig::validate() const {
    if (bits_min < 1 || bits_max < bits_min || bits_max > kMaxTableBits) {
        throw std::invalid_argument("bad bit range [" + std::to_string(bits_min) + ", " + std::to_string(bits_max) + "]");
    }
    if (count < 0 || max_terms < 1 || max_arity < 0) {
        throw std::invalid_argument("count, max_terms and max_arity must be nonnegative (max_terms positive)");
    }
    if (!(p_macro >= 0 && p_macro <= 1)) {
        throw std::invalid_argument("p_macro must lie in [0, 1]");
    }
}

nlohmann::json GenConfig::to_json() const {
    return {
        {"bits_min", bits_min},   {"bits_max", bits_max},   {"count", count},      {"seed", seed},
        {"max_terms", max_terms}, {"max_arity", max_arity}, {"p_macro", p_macro},
    };
}

GenConfig GenConfig::from_json(const nlohmann::json &j) {
    GenConfig c;
    c.bits_min = j.value("bits_min", c.bits_min);
    c.bits_max = j.value("bits_max", c.bits_max);
    c.count = j.value("count", c.count);
    c.seed = j.value("seed", c.seed);
    c.max_terms = j.value("max_terms", c.max_terms);
    c.max_arity = j.value("max_arity", c.max_arity);
    c.p_macro = j.value("p_macro", c.p_macro);
    c.validate();
    return c;
}

bool TaskInstance::operator==(const TaskInstance &other) const {
    return id == other.id && formula == other.formula && num_bits == other.num_bits && s_base == other.s_base &&
           l_base == other.l_base && table == other.table;
}

namespace {

int ceil_log2(int n) {
    int k = 0;
    while ((1 << k) < n) {
        k++;
    }
    return k;
}

Expr conjunction(std::span<const int> vars, std::span<const uint8_t> negated) {
    Expr out = Expr::constant(true);
    for (size_t i = 0; i < vars.size(); i++) {
        Expr lit = Expr::var(vars[i]);
        if (negated[i]) {
            lit = Expr::negate(lit);
        }
        out = i == 0 ? lit : Expr::apply(kGateAnd, out, lit);
    }
    return out;
}

}  // namespace

TaskInstance sample_formula(int num_bits, const GenConfig &config, Rng &rng) {
    if (num_bits < 1 || num_bits > kMaxTableBits) {
        throw std::invalid_argument("sample_formula: bit count out of range");
    }
    int max_arity = config.max_arity > 0 ? std::min(config.max_arity, num_bits) : num_bits;
    int terms = static_cast<int>(rng.between(1, config.max_terms));
    int widest = 1;
    Expr formula = Expr::constant(false);
    std::vector<int> vars(num_bits);
    for (int t = 0; t < terms; t++) {
        int arity = static_cast<int>(rng.between(1, max_arity));
        widest = std::max(widest, arity);
        std::iota(vars.begin(), vars.end(), 0);
        // Partial Fisher-Yates for `arity` distinct variables.
        for (int i = 0; i < arity; i++) {
            std::swap(vars[i], vars[i + rng.below(num_bits - i)]);
        }
        std::sort(vars.begin(), vars.begin() + arity);
        std::vector<uint8_t> negated(arity);
        for (auto &n : negated) {
            n = static_cast<uint8_t>(rng.below(2));
        }
        std::span<const int> v(vars.data(), arity);
        Expr term = conjunction(v, negated);
        if (rng.uniform() < config.p_macro && arity >= 2) {
            static constexpr int kMacros[] = {kGateXor, kGateNotAOrB, kGateXnor};
            int gate = kMacros[rng.below(3)];
            size_t cut = rng.between(1, arity - 1);
            std::span<const uint8_t> n(negated);
            term = Expr::apply(
                gate, conjunction(v.first(cut), n.first(cut)), conjunction(v.subspan(cut), n.subspan(cut)));
        }
        formula = t == 0 ? term : Expr::apply(kGateOr, formula, term);
    }
    TaskInstance inst;
    inst.num_bits = num_bits;
    inst.formula = formula;
    inst.s_base = terms;
    inst.l_base = 2 + ceil_log2(widest);
    inst.table = expression_table(formula, num_bits);
    return inst;
}

std::vector<TaskInstance> generate_dataset(const GenConfig &config) {
    config.validate();
    Rng root(config.seed);
    std::vector<TaskInstance> out;
    out.reserve(config.count);
    for (int i = 0; i < config.count; i++) {
        Rng rng = root.split(static_cast<uint64_t>(i));
        int b = static_cast<int>(rng.between(config.bits_min, config.bits_max));
        auto inst = sample_formula(b, config, rng);
        inst.id = i;
        out.push_back(std::move(inst));
    }
    return out;
}

ScaleRule ScaleRule::identity() {
    return {};
}

ScaleRule ScaleRule::add(int k) {
    ScaleRule r;
    r.op = ScaleOp::kAdd;
    r.k = k;
    return r;
}

ScaleRule ScaleRule::mul(int k) {
    ScaleRule r;
    r.op = ScaleOp::kMul;
    r.k = k;
    return r;
}

int ScaleRule::apply(int base) const {
    int v = base;
    switch (op) {
        case ScaleOp::kIdentity:
            break;
        case ScaleOp::kAdd:
            v = base + k;
            break;
        case ScaleOp::kMul:
            v = base * k;
            break;
    }
    return std::clamp(v, min, max);
}

nlohmann::json ScaleRule::to_json() const {
    static constexpr const char *kNames[] = {"identity", "add", "mul"};
    return {{"op", kNames[static_cast<int>(op)]}, {"k", k}, {"min", min}, {"max", max}};
}

ScaleRule ScaleRule::from_json(const nlohmann::json &j) {
    ScaleRule r;
    auto op = j.value("op", std::string("identity"));
    if (op == "identity") {
        r.op = ScaleOp::kIdentity;
    } else if (op == "add") {
        r.op = ScaleOp::kAdd;
    } else if (op == "mul") {
        r.op = ScaleOp::kMul;
    } else {
        throw std::invalid_argument("unknown scale op '" + op + "'");
    }
    r.k = j.value("k", r.k);
    r.min = j.value("min", r.min);
    r.max = j.value("max", r.max);
    if (r.min > r.max) {
        throw std::invalid_argument("scale rule has min > max");
    }
    return r;
}

std::pair<int, int> scale_shape(int s_base, int l_base, const ScaleRule &s_rule, const ScaleRule &l_rule) {
    return {std::max(1, s_rule.apply(s_base)), std::max(2, l_rule.apply(l_base))};
}

nlohmann::json instance_to_json(const TaskInstance &inst) {
    return {
        {"id", inst.id},
        {"formula", expr_to_json(inst.formula)},
        {"text", render(inst.formula)},
        {"B", inst.num_bits},
        {"S_base", inst.s_base},
        {"L_base", inst.l_base},
        {"outputs", inst.table.to_hex()},
    };
}

TaskInstance instance_from_json(const nlohmann::json &j) {
    TaskInstance inst;
    inst.id = j.value("id", 0);
    inst.num_bits = j.at("B").get<int>();
    inst.formula = expr_from_json(j.at("formula"));
    inst.s_base = j.at("S_base").get<int>();
    inst.l_base = j.at("L_base").get<int>();
    inst.table = TruthTable::from_hex(inst.num_bits, j.at("outputs").get<std::string>());
    if (expression_table(inst.formula, inst.num_bits) != inst.table) {
        throw std::invalid_argument("outputs do not match the formula");
    }
    if (inst.s_base < 1 || inst.l_base < 2) {
        throw std::invalid_argument("S_base must be >= 1 and L_base >= 2");
    }
    return inst;
}

void write_dataset(const std::vector<TaskInstance> &instances, const std::string &path) {
    std::ofstream out(path);
    if (!out) {
        throw DatasetError("cannot open '" + path + "' for writing");
    }
    for (const auto &inst : instances) {
        out << instance_to_json(inst).dump() << '\n';
    }
    if (!out) {
        throw DatasetError("write to '" + path + "' failed");
    }
}

std::vector<TaskInstance> read_dataset(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw DatasetError("cannot open '" + path + "'");
    }
    std::vector<TaskInstance> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(instance_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception &e) {
            throw DatasetError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace sbc
