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

#include "sbc/gate.h"

namespace sbc {

namespace {

constexpr std::array<std::string_view, kNumGates> kGateNames{
    "FALSE", "AND", "A_AND_NOT_B", "PROJ_A", "NOT_A_AND_B", "PROJ_B", "XOR", "OR",
    "NOR", "XNOR", "NOT_B", "A_OR_NOT_B", "NOT_A", "NOT_A_OR_B", "NAND", "TRUE",
};

}  // namespace

std::string_view gate_name(int id) {
    if (!is_valid_gate_id(id)) {
        throw std::out_of_range("gate id must lie in [1, 16], got " + std::to_string(id));
    }
    return kGateNames[id - 1];
}

std::string_view Gate::name() const {
    return gate_name(id_);
}

int gate_id_from_name(std::string_view name) {
    for (int i = 0; i < kNumGates; i++) {
        if (kGateNames[i] == name) {
            return i + 1;
        }
    }
    throw std::invalid_argument("unknown gate name '" + std::string(name) + "'");
}

}  // namespace sbc
