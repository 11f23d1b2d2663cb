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

#ifndef SBC_CIRCUIT_H
#define SBC_CIRCUIT_H

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbc/truth_table.h"

namespace sbc {

/// A fan-in-2 node: gate id in [1,16] and two 0-based indices into the
/// previous layer.
struct CircuitNode {
    int gate = 1;
    int left = 0;
    int right = 0;

    bool operator==(const CircuitNode &) const = default;
};

/// A discrete layered circuit. Layer 1 is the lifting layer: entry k of
/// `lift_select` is a 1-based literal index in [1, 2B], where index j <= B
/// selects x_j and index j > B selects NOT x_{j-B}. `layers` holds the gate
/// layers 2..Delta; the last one must have width 1. When there are no gate
/// layers the lifting layer itself must have width 1.
struct LayeredCircuit {
    int num_input_bits = 0;
    /// Declared width bound; every layer (lifting included) must fit.
    int width = 0;
    std::vector<int> lift_select;
    std::vector<std::vector<CircuitNode>> layers;

    /// Number of layers including the lifting layer.
    int depth() const {
        return 1 + static_cast<int>(layers.size());
    }
    size_t gate_count() const;

    bool operator==(const LayeredCircuit &) const = default;
};

/// Report-style structural check: lists every violation found.
struct ValidationReport {
    std::vector<std::string> violations;

    bool ok() const {
        return violations.empty();
    }
    std::string str() const;
};

ValidationReport validate_circuit(const LayeredCircuit &c);

class CircuitError : public std::invalid_argument {
   public:
    explicit CircuitError(ValidationReport report);
    const ValidationReport &report() const {
        return report_;
    }

   private:
    ValidationReport report_;
};

/// Value of a literal index (1-based, see LayeredCircuit) on input x.
uint8_t literal_value(int literal, std::span<const uint8_t> x);

/// Evaluates the circuit on one input. Validates first and throws
/// CircuitError on an invalid circuit or std::invalid_argument when
/// x has the wrong length.
uint8_t circuit_eval(const LayeredCircuit &c, std::span<const uint8_t> x);

/// Values of every node on input x: entry 0 is the lifting layer, entry l
/// the l-th gate layer. Assumes `c` is valid.
std::vector<std::vector<uint8_t>> circuit_node_values(const LayeredCircuit &c, std::span<const uint8_t> x);

/// Full truth table of a circuit (validated once).
TruthTable circuit_table(const LayeredCircuit &c);

nlohmann::json circuit_to_json(const LayeredCircuit &c);
LayeredCircuit circuit_from_json(const nlohmann::json &j);

}  // namespace sbc

#endif
