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

#include "sbc/expression.h"

#include <cctype>
#include <map>
#include <vector>

#include "sbc/gate.h"

namespace sbc {

struct Expr::Node {
    Kind kind;
    int value;  // variable index, gate id, or constant bit
    std::vector<Expr> kids;
};

Expr::Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {
}

Expr Expr::var(int index) {
    if (index < 0) {
        throw std::invalid_argument("variable index must be nonnegative");
    }
    return Expr(std::make_shared<const Node>(Node{Kind::kVar, index, {}}));
}

Expr Expr::negate(Expr e) {
    return Expr(std::make_shared<const Node>(Node{Kind::kNot, 0, {std::move(e)}}));
}

Expr Expr::constant(bool value) {
    return Expr(std::make_shared<const Node>(Node{Kind::kConst, value ? 1 : 0, {}}));
}

Expr Expr::apply(int gate_id, Expr left, Expr right) {
    Gate g(gate_id);
    return Expr(std::make_shared<const Node>(Node{Kind::kGate, g.id(), {std::move(left), std::move(right)}}));
}

Expr::Kind Expr::kind() const {
    return node_->kind;
}
int Expr::var_index() const {
    return node_->value;
}
bool Expr::const_value() const {
    return node_->value != 0;
}
int Expr::gate_id() const {
    return node_->value;
}

const Expr &Expr::child() const {
    return node_->kids.at(0);
}
const Expr &Expr::left() const {
    return node_->kids.at(0);
}
const Expr &Expr::right() const {
    return node_->kids.at(1);
}

uint8_t Expr::eval(std::span<const uint8_t> x) const {
    switch (kind()) {
        case Kind::kVar:
            if (var_index() >= static_cast<int>(x.size())) {
                throw std::out_of_range("expression uses x" + std::to_string(var_index() + 1) + " beyond input width");
            }
            return x[var_index()];
        case Kind::kNot:
            return child().eval(x) ^ 1;
        case Kind::kConst:
            return const_value() ? 1 : 0;
        case Kind::kGate:
            return gate_bit(gate_id(), corner_index(left().eval(x), right().eval(x)));
    }
    return 0;
}

int Expr::num_vars_used() const {
    switch (kind()) {
        case Kind::kVar:
            return var_index() + 1;
        case Kind::kNot:
            return child().num_vars_used();
        case Kind::kConst:
            return 0;
        case Kind::kGate:
            return std::max(left().num_vars_used(), right().num_vars_used());
    }
    return 0;
}

bool Expr::operator==(const Expr &other) const {
    if (node_ == other.node_) {
        return true;
    }
    if (kind() != other.kind() || node_->value != other.node_->value) {
        return false;
    }
    switch (kind()) {
        case Kind::kVar:
        case Kind::kConst:
            return true;
        case Kind::kNot:
            return child() == other.child();
        case Kind::kGate:
            return left() == other.left() && right() == other.right();
    }
    return false;
}

namespace {

// Rendering template per gate: L and R are the operands.
std::string render_gate(int id, const std::string &l, const std::string &r) {
    switch (id) {
        case kGateFalse:
            return "0";
        case kGateAnd:
            return "(" + l + " & " + r + ")";
        case kGateAAndNotB:
            return "(" + l + " & ~" + r + ")";
        case kGateProjA:
            return l;
        case kGateNotAAndB:
            return "(~" + l + " & " + r + ")";
        case kGateProjB:
            return r;
        case kGateXor:
            return "(" + l + " ^ " + r + ")";
        case kGateOr:
            return "(" + l + " | " + r + ")";
        case kGateNor:
            return "~(" + l + " | " + r + ")";
        case kGateXnor:
            return "(" + l + " <-> " + r + ")";
        case kGateNotB:
            return "~" + r;
        case kGateAOrNotB:
            return "(" + l + " | ~" + r + ")";
        case kGateNotA:
            return "~" + l;
        case kGateNotAOrB:
            return "(~" + l + " | " + r + ")";
        case kGateNand:
            return "~(" + l + " & " + r + ")";
        case kGateTrue:
            return "1";
    }
    return "?";
}

// Operator symbols contributed by each gate template, and which operands it uses.
struct GateTokens {
    int ops;
    bool uses_left;
    bool uses_right;
};

constexpr std::array<GateTokens, kNumGates> kGateTokens{{
    {1, false, false},  // FALSE
    {1, true, true},    // AND
    {2, true, true},    // A AND NOT B
    {0, true, false},   // PROJ_A
    {2, true, true},    // NOT A AND B
    {0, false, true},   // PROJ_B
    {1, true, true},    // XOR
    {1, true, true},    // OR
    {2, true, true},    // NOR
    {1, true, true},    // XNOR
    {1, false, true},   // NOT B
    {2, true, true},    // A OR NOT B
    {1, true, false},   // NOT A
    {2, true, true},    // NOT A OR B
    {2, true, true},    // NAND
    {1, false, false},  // TRUE
}};

}  // namespace

std::string render(const Expr &e) {
    switch (e.kind()) {
        case Expr::Kind::kVar:
            return "x" + std::to_string(e.var_index() + 1);
        case Expr::Kind::kNot:
            return "~" + render(e.child());
        case Expr::Kind::kConst:
            return e.const_value() ? "1" : "0";
        case Expr::Kind::kGate: {
            const auto &t = kGateTokens[e.gate_id() - 1];
            std::string l = t.uses_left ? render(e.left()) : std::string();
            std::string r = t.uses_right ? render(e.right()) : std::string();
            return render_gate(e.gate_id(), l, r);
        }
    }
    return "";
}

int expr_tokens(const Expr &e) {
    switch (e.kind()) {
        case Expr::Kind::kVar:
        case Expr::Kind::kConst:
            return 1;
        case Expr::Kind::kNot:
            return 1 + expr_tokens(e.child());
        case Expr::Kind::kGate: {
            const auto &t = kGateTokens[e.gate_id() - 1];
            int n = t.ops;
            if (t.uses_left) {
                n += expr_tokens(e.left());
            }
            if (t.uses_right) {
                n += expr_tokens(e.right());
            }
            return n;
        }
    }
    return 0;
}

namespace {

class Parser {
   public:
    explicit Parser(std::string_view text) : text_(text) {
    }

    Expr parse() {
        Expr e = parse_implies();
        skip_ws();
        if (pos_ != text_.size()) {
            fail("unexpected trailing input");
        }
        return e;
    }

   private:
    [[noreturn]] void fail(const std::string &msg) const {
        throw ExprParseError(msg + " at offset " + std::to_string(pos_) + " in '" + std::string(text_) + "'");
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            pos_++;
        }
    }

    bool accept(std::string_view tok) {
        skip_ws();
        if (text_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    // Right associative.
    Expr parse_implies() {
        Expr lhs = parse_iff();
        if (accept("->")) {
            return Expr::apply(kGateNotAOrB, lhs, parse_implies());
        }
        return lhs;
    }

    Expr parse_iff() {
        Expr e = parse_or();
        while (accept("<->")) {
            e = Expr::apply(kGateXnor, e, parse_or());
        }
        return e;
    }

    Expr parse_or() {
        Expr e = parse_xor();
        while (accept("|")) {
            e = Expr::apply(kGateOr, e, parse_xor());
        }
        return e;
    }

    Expr parse_xor() {
        Expr e = parse_and();
        while (accept("^")) {
            e = Expr::apply(kGateXor, e, parse_and());
        }
        return e;
    }

    Expr parse_and() {
        Expr e = parse_unary();
        while (accept("&")) {
            e = Expr::apply(kGateAnd, e, parse_unary());
        }
        return e;
    }

    Expr parse_unary() {
        if (accept("~") || accept("!")) {
            return Expr::negate(parse_unary());
        }
        return parse_atom();
    }

    Expr parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) {
            fail("unexpected end of input");
        }
        char ch = text_[pos_];
        if (ch == '(') {
            pos_++;
            Expr e = parse_implies();
            if (!accept(")")) {
                fail("expected ')'");
            }
            return e;
        }
        if (ch == '0' || ch == '1') {
            pos_++;
            return Expr::constant(ch == '1');
        }
        if (ch == 'x' || ch == 'X') {
            pos_++;
            size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                pos_++;
            }
            if (start == pos_) {
                fail("expected variable number after 'x'");
            }
            int index = std::stoi(std::string(text_.substr(start, pos_ - start)));
            if (index < 1) {
                fail("variables are numbered from x1");
            }
            return Expr::var(index - 1);
        }
        fail(std::string("unexpected character '") + ch + "'");
    }

    std::string_view text_;
    size_t pos_ = 0;
};

}  // namespace

Expr parse_expression(std::string_view text) {
    return Parser(text).parse();
}

TruthTable expression_table(const Expr &e, int num_bits) {
    if (e.num_vars_used() > num_bits) {
        throw std::invalid_argument(
            "expression uses x" + std::to_string(e.num_vars_used()) + " but table has " + std::to_string(num_bits) +
            " bits");
    }
    return enumerate_table([&](std::span<const uint8_t> x) { return e.eval(x); }, num_bits);
}

Expr circuit_expression(const LayeredCircuit &c) {
    auto report = validate_circuit(c);
    if (!report.ok()) {
        throw CircuitError(std::move(report));
    }
    int b = c.num_input_bits;
    std::vector<Expr> prev;
    for (int lit : c.lift_select) {
        if (lit <= b) {
            prev.push_back(Expr::var(lit - 1));
        } else {
            prev.push_back(Expr::negate(Expr::var(lit - b - 1)));
        }
    }
    for (const auto &layer : c.layers) {
        std::vector<Expr> next;
        next.reserve(layer.size());
        for (const auto &node : layer) {
            next.push_back(Expr::apply(node.gate, prev[node.left], prev[node.right]));
        }
        prev = std::move(next);
    }
    return prev[0];
}

nlohmann::json expr_to_json(const Expr &e) {
    switch (e.kind()) {
        case Expr::Kind::kVar:
            return {{"var", e.var_index() + 1}};
        case Expr::Kind::kNot:
            return {{"not", expr_to_json(e.child())}};
        case Expr::Kind::kConst:
            return {{"const", e.const_value() ? 1 : 0}};
        case Expr::Kind::kGate:
            return {{"gate", e.gate_id()}, {"l", expr_to_json(e.left())}, {"r", expr_to_json(e.right())}};
    }
    return nullptr;
}

Expr expr_from_json(const nlohmann::json &j) {
    if (!j.is_object()) {
        throw std::invalid_argument("expression node must be a JSON object");
    }
    if (j.contains("var")) {
        int v = j.at("var").get<int>();
        if (v < 1) {
            throw std::invalid_argument("expression variables are 1-based");
        }
        return Expr::var(v - 1);
    }
    if (j.contains("not")) {
        return Expr::negate(expr_from_json(j.at("not")));
    }
    if (j.contains("const")) {
        return Expr::constant(j.at("const").get<int>() != 0);
    }
    if (j.contains("gate")) {
        return Expr::apply(j.at("gate").get<int>(), expr_from_json(j.at("l")), expr_from_json(j.at("r")));
    }
    throw std::invalid_argument("unrecognized expression node: " + j.dump());
}

}  // namespace sbc
