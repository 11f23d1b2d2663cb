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

#ifndef SBC_TRUTH_TABLE_H
#define SBC_TRUTH_TABLE_H

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sbc {

/// Largest input width accepted by enumerate_table.
constexpr int kMaxTableBits = 20;

/// Bit j (0-based, x_{j+1}) of row `index` of a B-bit table. Rows are
/// indexed big-endian: x_1 is the most significant bit.
constexpr uint8_t input_bit(uint64_t index, int num_bits, int j) {
    return static_cast<uint8_t>((index >> (num_bits - 1 - j)) & 1);
}

/// All B input bits of row `index`.
std::vector<uint8_t> input_bits(uint64_t index, int num_bits);

/// A Boolean function on B bits, stored as its 2^B outputs in row order.
class TruthTable {
   public:
    TruthTable() = default;
    TruthTable(int num_bits, std::vector<uint8_t> outputs);

    /// All-zero table on B bits.
    static TruthTable zeros(int num_bits);

    int num_bits() const {
        return num_bits_;
    }
    size_t size() const {
        return outputs_.size();
    }
    uint8_t operator[](size_t row) const {
        return outputs_[row];
    }
    uint8_t &operator[](size_t row) {
        return outputs_[row];
    }
    const std::vector<uint8_t> &outputs() const {
        return outputs_;
    }

    bool is_constant() const;
    size_t count_ones() const;

    /// Hex packing: rows in index order, four rows per hex digit with the
    /// earliest row in the most significant position; the final digit is
    /// zero-padded in its low bits. (0,1,1,0,1,0,0,1) packs to "69".
    std::string to_hex() const;
    static TruthTable from_hex(int num_bits, std::string_view hex);

    bool operator==(const TruthTable &other) const = default;

   private:
    int num_bits_ = 0;
    std::vector<uint8_t> outputs_;
};

/// Evaluates `f` on every row of the B-bit cube. Throws std::length_error
/// when B exceeds kMaxTableBits and std::invalid_argument when B < 1.
TruthTable enumerate_table(const std::function<uint8_t(std::span<const uint8_t>)> &f, int num_bits);

}  // namespace sbc

#endif
