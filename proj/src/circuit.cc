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

#include "sbc/circuit.h"

#include <sstream>

#include "sbc/gate.h"

namespace sbc {

size_t LayeredCircuit::gate_count() const {
    size_t n = 0;
    for (const auto &layer : layers) {
        n += layer.size();
    }
    return n;
}

std::string ValidationReport::str() const {
    if (ok()) {
        return "ok";
    }
    std::ostringstream out;
    for (size_t i = 0; i < violations.size(); i++) {
        if (i) {
            out << "; ";
        }
        out << violations[i];
    }
    return out.str();
}

ValidationReport validate_circuit(const LayeredCircuit &c) {
    ValidationReport report;
    auto add = [&](std::string msg) { report.violations.push_back(std::move(msg)); };

    if (c.num_input_bits < 1) {
        add("num_input_bits must be positive");
    }
    if (c.width < 1) {
        add("declared width must be positive");
    }
    if (c.lift_select.empty()) {
        add("lifting layer is empty");
    }
    if (static_cast<int>(c.lift_select.size()) > c.width) {
        add("layer 1 width " + std::to_string(c.lift_select.size()) + " exceeds declared width");
    }
    for (size_t k = 0; k < c.lift_select.size(); k++) {
        int lit = c.lift_select[k];
        if (lit < 1 || lit > 2 * c.num_input_bits) {
            add("lift index out of range at layer 1 node " + std::to_string(k) + ": " + std::to_string(lit));
        }
    }

    size_t prev_width = c.lift_select.size();
    for (size_t l = 0; l < c.layers.size(); l++) {
        const auto &layer = c.layers[l];
        std::string where = "layer " + std::to_string(l + 2);
        if (layer.empty()) {
            add(where + " is empty");
        }
        if (static_cast<int>(layer.size()) > c.width) {
            add(where + " width " + std::to_string(layer.size()) + " exceeds declared width");
        }
        for (size_t k = 0; k < layer.size(); k++) {
            const auto &node = layer[k];
            std::string at = where + " node " + std::to_string(k);
            if (!is_valid_gate_id(node.gate)) {
                add("gate id out of range at " + at + ": " + std::to_string(node.gate));
            }
            if (node.left < 0 || static_cast<size_t>(node.left) >= prev_width) {
                add("parent out of range at " + at + " (left=" + std::to_string(node.left) + ")");
            }
            if (node.right < 0 || static_cast<size_t>(node.right) >= prev_width) {
                add("parent out of range at " + at + " (right=" + std::to_string(node.right) + ")");
            }
        }
        prev_width = layer.size();
    }
    if (prev_width != 1) {
        add("wrong final width: " + std::to_string(prev_width));
    }
    return report;
}

CircuitError::CircuitError(ValidationReport report)
    : std::invalid_argument("invalid circuit: " + report.str()), report_(std::move(report)) {
}

uint8_t literal_value(int literal, std::span<const uint8_t> x) {
    int n = static_cast<int>(x.size());
    if (literal <= n) {
        return x[literal - 1];
    }
    return x[literal - n - 1] ^ 1;
}

std::vector<std::vector<uint8_t>> circuit_node_values(const LayeredCircuit &c, std::span<const uint8_t> x) {
    std::vector<std::vector<uint8_t>> values;
    values.reserve(c.layers.size() + 1);
    std::vector<uint8_t> cur(c.lift_select.size());
    for (size_t k = 0; k < cur.size(); k++) {
        cur[k] = literal_value(c.lift_select[k], x);
    }
    values.push_back(cur);
    for (const auto &layer : c.layers) {
        const auto &prev = values.back();
        std::vector<uint8_t> next(layer.size());
        for (size_t k = 0; k < layer.size(); k++) {
            const auto &node = layer[k];
            next[k] = gate_bit(node.gate, corner_index(prev[node.left], prev[node.right]));
        }
        values.push_back(std::move(next));
    }
    return values;
}

namespace {

void check_input(const LayeredCircuit &c, std::span<const uint8_t> x) {
    if (static_cast<int>(x.size()) != c.num_input_bits) {
        throw std::invalid_argument(
            "circuit expects " + std::to_string(c.num_input_bits) + " input bits, got " + std::to_string(x.size()));
    }
}

uint8_t eval_unchecked(const LayeredCircuit &c, std::span<const uint8_t> x) {
    return circuit_node_values(c, x).back()[0];
}

}  // namespace

uint8_t circuit_eval(const LayeredCircuit &c, std::span<const uint8_t> x) {
    auto report = validate_circuit(c);
    if (!report.ok()) {
        throw CircuitError(std::move(report));
    }
    check_input(c, x);
    return eval_unchecked(c, x);
}

TruthTable circuit_table(const LayeredCircuit &c) {
    auto report = validate_circuit(c);
    if (!report.ok()) {
        throw CircuitError(std::move(report));
    }
    int b = c.num_input_bits;
    std::vector<uint8_t> out(size_t{1} << b);
    for (size_t i = 0; i < out.size(); i++) {
        auto x = input_bits(i, b);
        out[i] = eval_unchecked(c, x);
    }
    return TruthTable(b, std::move(out));
}

nlohmann::json circuit_to_json(const LayeredCircuit &c) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto &layer : c.layers) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto &node : layer) {
            nodes.push_back({{"gate", node.gate}, {"left", node.left}, {"right", node.right}});
        }
        layers.push_back(std::move(nodes));
    }
    return {
        {"num_input_bits", c.num_input_bits},
        {"width", c.width},
        {"lift_select", c.lift_select},
        {"layers", std::move(layers)},
    };
}

LayeredCircuit circuit_from_json(const nlohmann::json &j) {
    LayeredCircuit c;
    c.num_input_bits = j.at("num_input_bits").get<int>();
    c.lift_select = j.at("lift_select").get<std::vector<int>>();
    for (const auto &layer : j.at("layers")) {
        std::vector<CircuitNode> nodes;
        for (const auto &node : layer) {
            nodes.push_back({node.at("gate").get<int>(), node.at("left").get<int>(), node.at("right").get<int>()});
        }
        c.layers.push_back(std::move(nodes));
    }
    if (j.contains("width")) {
        c.width = j.at("width").get<int>();
    } else {
        size_t w = c.lift_select.size();
        for (const auto &layer : c.layers) {
            w = std::max(w, layer.size());
        }
        c.width = static_cast<int>(w);
    }
    return c;
}

}  // namespace sbc
