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

#ifndef SBC_DIAG_H
#define SBC_DIAG_H

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbc/circuit.h"
#include "sbc/gate.h"
#include "sbc/mlp.h"
#include "sbc/stack.h"
#include "sbc/truth_table.h"

namespace sbc {

/// 1 when every 0.5-thresholded prediction matches the target, else 0.
/// Throws std::invalid_argument on a size mismatch.
double exact_match(std::span<const double> pred, const TruthTable &target);
double exact_match(const TruthTable &pred, const TruthTable &target);

/// Unit values of one layer over the whole truth table, rows x width.
struct LayerTraces {
    size_t rows = 0;
    int width = 0;
    std::vector<double> values;

    static LayerTraces from_rows(std::vector<double> values, size_t rows, int width);
    /// Column `k` as a UnitTrace.
    std::vector<double> unit(int k) const;
};

/// At most two distinct values after rounding to `decimals` places.
bool bnr_exact(std::span<const double> u, int decimals = 6);

/// Two-cluster check: some split of the sorted trace into a lower and an
/// upper part, each centered on its own lower median, leaves every value
/// within eps of its center. The split at the lower median is one candidate;
/// the others keep unbalanced two-valued traces passing.
bool bnr_eps(std::span<const double> u, double eps = 1e-3);

/// Fraction of units per layer passing bnr_exact, averaged over layers.
/// Full-cube traces enumerate each layer's reachable input set.
double bnr_density(const std::vector<LayerTraces> &layers, int decimals = 6);
/// Same with bnr_eps.
double bnr_eps_density(const std::vector<LayerTraces> &layers, double eps = 1e-3);

/// Row x maps to 1 iff u(x) >= u(all-zero input), i.e. u(row 0).
std::vector<uint8_t> binarize(std::span<const double> u);
std::vector<std::vector<uint8_t>> binarize_layer(const LayerTraces &layer);

/// Best-matching primitive of one unit. gate == 0 marks a literal match
/// (left is the source, negated tells the polarity).
struct PrimMatch {
    double agreement = 0;
    int gate = 0;
    int left = 0;
    int right = 0;
    bool negated = false;

    bool hit() const {
        return agreement == 1.0;
    }
};

struct PrimRecovery {
    double hit = 0;   // fraction of units with agreement exactly 1
    double best = 0;  // mean best agreement
    std::vector<PrimMatch> units;
};

/// Best agreement of `target` against the 16 gates on ordered pairs of
/// distinct sources, then plain and negated sources. Ties keep the first
/// candidate scanned: gates in order of how many inputs they depend on
/// (constants, single-input gates, binary gates; by id within a group),
/// pairs lexicographically, literals last.
PrimMatch best_primitive(std::span<const uint8_t> target, const std::vector<std::vector<uint8_t>> &sources);

/// Binarized first-layer units against the primitives over the inputs.
PrimRecovery prim_recover_input(const std::vector<std::vector<uint8_t>> &units, int num_bits);

struct LayerwiseRecovery {
    std::vector<PrimRecovery> layers;  // entry l compares layer l + 1 to layer l
    double hit = 0;                    // mean of per-layer hit rates
    double best = 0;

    /// Gate ids of every exact hit across layers.
    std::array<long, kNumGates> hit_histogram() const;
};

/// Throws std::invalid_argument with fewer than two layers.
LayerwiseRecovery prim_recover_layer(const std::vector<std::vector<std::vector<uint8_t>>> &layers);

struct GateHistograms {
    std::array<long, kNumGates> sbc_all{};
    std::array<long, kNumGates> sbc_path{};
    std::array<long, kNumGates> mlp_all{};

    GateHistograms &operator+=(const GateHistograms &other);
    /// 16 rows: gate,name,sbc_all,sbc_path,mlp_all.
    std::string to_csv() const;
};

/// Counts over every decoded node of `c` and along its readout path.
GateHistograms circuit_histograms(const LayeredCircuit &c);

struct DiagReport {
    double em = 0;
    double bnr_exact_l1 = 0;
    double bnr_exact_all = 0;
    double bnr_eps_l1 = 0;
    double bnr_eps_all = 0;
    double prim_hit_in = 0;
    double prim_best_in = 0;
    double prim_hit_layer_all = 0;
    double prim_best_layer_all = 0;
    std::array<long, kNumGates> gate_histogram{};
    int expr_tokens = 0;

    nlohmann::json to_json() const;
    static DiagReport from_json(const nlohmann::json &j);
    bool operator==(const DiagReport &) const = default;
};

/// Diagnostics of a trained MLP over its hidden ReLU layers. The gate
/// histogram collects exact layerwise hits; expr_tokens is 0. Layerwise
/// fields are 0 for a single hidden layer.
DiagReport diagnose_mlp(const MlpParams &params, const TruthTable &target);

/// Diagnostics of a discrete circuit: em is its exact match and the trace
/// metrics run over its gate layers.
DiagReport diagnose_circuit(const LayeredCircuit &c, const TruthTable &target);

/// Diagnostics of a trained stack. em is the soft EM; the remaining fields
/// are computed on the argmax-decoded circuit's gate layers, and the
/// histogram counts every decoded node.
DiagReport diagnose_sbc(const StackParams &params, const StackSchedule &schedule, const TruthTable &target);

}  // namespace sbc

#endif
