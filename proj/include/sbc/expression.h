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

#ifndef SBC_EXPRESSION_H
#define SBC_EXPRESSION_H

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"
#include "sbc/circuit.h"
#include "sbc/truth_table.h"

namespace sbc {

/// Immutable Boolean expression over x_1..x_B, negation, constants and the
/// 16 gate symbols. Subtrees are shared.
class Expr {
   public:
    enum class Kind { kVar, kNot, kConst, kGate };

    static Expr var(int index);  // 0-based variable index
    static Expr negate(Expr e);
    static Expr constant(bool value);
    static Expr apply(int gate_id, Expr left, Expr right);

    Kind kind() const;
    int var_index() const;
    bool const_value() const;
    int gate_id() const;
    const Expr &child() const;  // kNot
    const Expr &left() const;   // kGate
    const Expr &right() const;  // kGate

    uint8_t eval(std::span<const uint8_t> x) const;
    /// Largest variable index used plus one (0 for constant expressions).
    int num_vars_used() const;

    bool operator==(const Expr &other) const;

   private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> node);
    std::shared_ptr<const Node> node_;
};

/// Infix rendering with explicit parentheses, using ~ & | ^ <-> and the
/// constants 0/1. Non-basic gates are written through their defining
/// expression, e.g. gate 3 renders as (L & ~R) and PROJ_A as L.
std::string render(const Expr &e);

/// Count of variable occurrences plus Boolean operator symbols in the
/// rendered form (~ counts once, constants count once, parentheses zero).
int expr_tokens(const Expr &e);

class ExprParseError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// Parses the rendering grammar. Precedence (loosest first): ->, <->, |, ^,
/// &, then prefix ~ or !. Variables are x1, x2, ...
Expr parse_expression(std::string_view text);

TruthTable expression_table(const Expr &e, int num_bits);

/// Symbolic form of a circuit's output node.
Expr circuit_expression(const LayeredCircuit &c);

nlohmann::json expr_to_json(const Expr &e);
Expr expr_from_json(const nlohmann::json &j);

}  // namespace sbc

#endif
