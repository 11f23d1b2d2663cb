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

#ifndef SBC_GATE_H
#define SBC_GATE_H

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sbc {

constexpr int kNumGates = 16;
constexpr int kNumCorners = 4;

/// The four Boolean corners of {0,1}^2 in the fixed order used by every
/// module: (0,0), (0,1), (1,0), (1,1). Corner c has a = c >> 1, b = c & 1.
constexpr std::array<std::array<uint8_t, 2>, kNumCorners> kCorners{{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};

constexpr int corner_index(uint8_t a, uint8_t b) {
    return (a << 1) | b;
}

// Gate ids, 1-based.
constexpr int kGateFalse = 1;
constexpr int kGateAnd = 2;
constexpr int kGateAAndNotB = 3;
constexpr int kGateProjA = 4;
constexpr int kGateNotAAndB = 5;
constexpr int kGateProjB = 6;
constexpr int kGateXor = 7;
constexpr int kGateOr = 8;
constexpr int kGateNor = 9;
constexpr int kGateXnor = 10;
constexpr int kGateNotB = 11;
constexpr int kGateAOrNotB = 12;
constexpr int kGateNotA = 13;
constexpr int kGateNotAOrB = 14;
constexpr int kGateNand = 15;
constexpr int kGateTrue = 16;

constexpr bool is_valid_gate_id(int id) {
    return id >= 1 && id <= kNumGates;
}

/// Output of gate `id` at corner `c`. The truth vector z is the binary
/// expansion of id - 1, most significant bit on corner (0,0).
constexpr uint8_t gate_bit(int id, int c) {
    return static_cast<uint8_t>(((id - 1) >> (kNumCorners - 1 - c)) & 1);
}

/// One of the 16 fan-in-2 Boolean gates.
class Gate {
   public:
    explicit constexpr Gate(int id) : id_(id) {
        if (!is_valid_gate_id(id)) {
            throw std::out_of_range("gate id must lie in [1, 16], got " + std::to_string(id));
        }
    }

    constexpr int id() const {
        return id_;
    }

    constexpr std::array<uint8_t, kNumCorners> truth() const {
        return {gate_bit(id_, 0), gate_bit(id_, 1), gate_bit(id_, 2), gate_bit(id_, 3)};
    }

    constexpr uint8_t operator()(uint8_t a, uint8_t b) const {
        return gate_bit(id_, corner_index(a & 1, b & 1));
    }

    std::string_view name() const;

    constexpr bool operator==(const Gate &other) const = default;

   private:
    int id_;
};

/// gate_eval from the Boolean core: output of gate g on inputs (a, b).
constexpr uint8_t gate_eval(Gate g, uint8_t a, uint8_t b) {
    return g(a, b);
}

/// Short upper-case names, e.g. "AND", "PROJ_A", "NOT_A_OR_B".
std::string_view gate_name(int id);

/// Inverse of gate_name; throws std::invalid_argument on unknown names.
int gate_id_from_name(std::string_view name);

}  // namespace sbc

#endif
