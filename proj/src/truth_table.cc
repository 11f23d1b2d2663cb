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

#include "sbc/truth_table.h"

#include <algorithm>
#include <stdexcept>

namespace sbc {

std::vector<uint8_t> input_bits(uint64_t index, int num_bits) {
    std::vector<uint8_t> x(num_bits);
    for (int j = 0; j < num_bits; j++) {
        x[j] = input_bit(index, num_bits, j);
    }
    return x;
}

TruthTable::TruthTable(int num_bits, std::vector<uint8_t> outputs) : num_bits_(num_bits), outputs_(std::move(outputs)) {
    if (num_bits < 0 || num_bits > kMaxTableBits) {
        throw std::invalid_argument("truth table width out of range: " + std::to_string(num_bits));
    }
    if (outputs_.size() != (size_t{1} << num_bits)) {
        throw std::invalid_argument(
            "truth table on " + std::to_string(num_bits) + " bits needs " + std::to_string(size_t{1} << num_bits) +
            " rows, got " + std::to_string(outputs_.size()));
    }
    for (auto &v : outputs_) {
        if (v > 1) {
            throw std::invalid_argument("truth table outputs must be 0 or 1");
        }
    }
}

TruthTable TruthTable::zeros(int num_bits) {
    return TruthTable(num_bits, std::vector<uint8_t>(size_t{1} << num_bits, 0));
}

bool TruthTable::is_constant() const {
    return std::all_of(outputs_.begin(), outputs_.end(), [&](uint8_t v) { return v == outputs_.front(); });
}

size_t TruthTable::count_ones() const {
    return std::count(outputs_.begin(), outputs_.end(), uint8_t{1});
}

std::string TruthTable::to_hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    for (size_t i = 0; i < outputs_.size(); i += 4) {
        int nibble = 0;
        for (size_t k = 0; k < 4; k++) {
            nibble <<= 1;
            if (i + k < outputs_.size()) {
                nibble |= outputs_[i + k];
            }
        }
        out.push_back(kDigits[nibble]);
    }
    return out;
}

TruthTable TruthTable::from_hex(int num_bits, std::string_view hex) {
    if (num_bits < 0 || num_bits > kMaxTableBits) {
        throw std::invalid_argument("truth table width out of range: " + std::to_string(num_bits));
    }
    size_t rows = size_t{1} << num_bits;
    size_t digits = (rows + 3) / 4;
    if (hex.size() != digits) {
        throw std::invalid_argument(
            "hex table for " + std::to_string(num_bits) + " bits needs " + std::to_string(digits) + " digits, got " +
            std::to_string(hex.size()));
    }
    std::vector<uint8_t> outputs(rows);
    for (size_t d = 0; d < digits; d++) {
        char ch = hex[d];
        int nibble;
        if (ch >= '0' && ch <= '9') {
            nibble = ch - '0';
        } else if (ch >= 'a' && ch <= 'f') {
            nibble = ch - 'a' + 10;
        } else if (ch >= 'A' && ch <= 'F') {
            nibble = ch - 'A' + 10;
        } else {
            throw std::invalid_argument(std::string("bad hex digit '") + ch + "'");
        }
        for (size_t k = 0; k < 4; k++) {
            uint8_t bit = (nibble >> (3 - k)) & 1;
            size_t row = d * 4 + k;
            if (row < rows) {
                outputs[row] = bit;
            } else if (bit) {
                throw std::invalid_argument("hex table has nonzero padding bits");
            }
        }
    }
    return TruthTable(num_bits, std::move(outputs));
}

TruthTable enumerate_table(const std::function<uint8_t(std::span<const uint8_t>)> &f, int num_bits) {
    if (num_bits < 1) {
        throw std::invalid_argument("enumerate_table needs at least one input bit");
    }
    if (num_bits > kMaxTableBits) {
        throw std::length_error(
            "enumerate_table: " + std::to_string(num_bits) + " bits exceeds the guard of " +
            std::to_string(kMaxTableBits));
    }
    size_t rows = size_t{1} << num_bits;
    std::vector<uint8_t> outputs(rows);
    std::vector<uint8_t> x(num_bits);
    for (size_t i = 0; i < rows; i++) {
        for (int j = 0; j < num_bits; j++) {
            x[j] = input_bit(i, num_bits, j);
        }
        outputs[i] = f(x) ? 1 : 0;
    }
    return TruthTable(num_bits, std::move(outputs));
}

}  // namespace sbc
