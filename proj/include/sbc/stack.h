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

#ifndef SBC_STACK_H
#define SBC_STACK_H

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbc/circuit.h"
#include "sbc/expression.h"
#include "sbc/interp.h"
#include "sbc/stochastic.h"
#include "sbc/truth_table.h"

namespace sbc {

class ConfigError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

enum class PairRoute { kLearned, kMiSoft, kMiHard };
enum class RepelMode { kNone, kLog, kHardLog, kMul, kHardMul };

std::string_view route_name(PairRoute r);
PairRoute route_from_name(std::string_view name);
std::string_view repel_name(RepelMode m);
RepelMode repel_from_name(std::string_view name);

/// Smoothing mass spread off the chosen index of an MI prior row.
constexpr double kPriorSmoothing = 0.1;

/// Shape of a DepthStack instance.
///
/// The stack is: optional lifting B -> B_eff, a first layer B_eff -> 2
/// wires, depth - 2 middle layers 2 -> 2, and a final layer 2 -> 1. Each
/// layer has `heads` units; a row-softmax mixer routes head outputs to the
/// layer's output wires. `tree_widths`, when non-empty, replaces the wire
/// counts per layer and sets heads = wires in each layer.
struct StackConfig {
    int num_bits = 0;
    bool use_lifting = false;
    int lift_width = 0;  // B_up; 0 means 2B
    int heads = 1;
    int depth = 2;
    InterpolantKind sigma16 = InterpolantKind::kRbf;
    double s_start = 0.35;
    double s_end = 0.35;
    double radius = 0.9;
    PairRoute route = PairRoute::kMiSoft;
    double prior_strength = 2.0;
    bool repel = false;
    RepelMode repel_mode = RepelMode::kLog;
    double repel_eta = 2.0;
    double init_scale = 0.1;
    std::vector<int> tree_widths;

    int b_eff() const;
    RepelMode effective_repel() const {
        return repel ? repel_mode : RepelMode::kNone;
    }
    InterpolantMode interpolant(double bandwidth) const;
    /// Throws ConfigError on an inconsistent shape.
    void validate() const;

    nlohmann::json to_json() const;
    static StackConfig from_json(const nlohmann::json &j);
    bool operator==(const StackConfig &) const = default;
};

struct LayerShape {
    int n_in = 0;
    int n_out = 0;
    int heads = 0;
};

std::vector<LayerShape> layer_shapes(const StackConfig &config);

/// One layer's parameter layout. Offsets index StackParams::values; -1
/// marks a tensor that is absent (fixed pairs under mi_hard).
struct LayerParams {
    LayerShape shape;
    long pair_left = -1;   // heads x n_in
    long pair_right = -1;  // heads x n_in
    long gate = -1;        // heads x 16
    long mixer = -1;       // n_out x heads
    /// Log-prior biases (prior_strength * log prior), heads x n_in; empty
    /// when no prior is used.
    std::vector<double> left_prior;
    std::vector<double> right_prior;
    /// (left, right) per head when pairs are fixed.
    std::vector<std::array<int, 2>> fixed_pairs;
};

struct NamedTensor {
    std::string name;
    long offset;
    int rows;
    int cols;
};

/// All trainable tensors of one instance, stored flat.
struct StackParams {
    StackConfig config;
    std::vector<double> values;
    long lift = -1;  // B_eff x 2B when lifting is on
    std::vector<LayerParams> layers;

    std::vector<NamedTensor> tensors() const;
    size_t trainable_count() const {
        return values.size();
    }
    std::span<double> view(long offset, size_t n) {
        return std::span<double>(values).subspan(offset, n);
    }
    std::span<const double> view(long offset, size_t n) const {
        return std::span<const double>(values).subspan(offset, n);
    }
};

/// Allocates tensors for `config` with zero values and no priors.
StackParams allocate_params(const StackConfig &config);

/// Gaussian init with std config.init_scale. `table` is required for the
/// MI routes; it supplies the pair priors or fixed pairs.
StackParams init_params(const StackConfig &config, Rng &rng, const TruthTable *table = nullptr);

/// Per-layer temperatures and interpolant bandwidths.
struct StackSchedule {
    std::vector<double> tau;
    std::vector<double> bandwidth;

    static StackSchedule constant(int depth, double tau, double bandwidth);
    /// tau for every layer, bandwidth on the config's linear layer schedule.
    static StackSchedule for_config(const StackConfig &config, double tau);
};

/// Linear bandwidth across layers: s_start + l/(L-1) (s_end - s_start).
double layer_bandwidth(const StackConfig &config, int layer);

/// Probabilities derived from one layer's logits at temperature tau.
struct LayerProbs {
    int n_in = 0, n_out = 0, heads = 0;
    std::vector<double> left;   // heads x n_in
    std::vector<double> right;  // heads x n_in, after repulsion
    std::vector<double> right_base;  // heads x n_in, before repulsion
    std::vector<double> gates;  // heads x 16
    std::vector<double> mix;    // n_out x heads
    std::vector<uint8_t> right_mask;  // heads x n_in, 1 where hard-masked
};

LayerProbs layer_probs(const StackParams &params, int layer, double tau);

/// Lifting row distributions (B_eff x 2B) at temperature tau.
std::vector<double> lifting_probs(const StackParams &params, double tau);

/// Adjusts right-pick logits (already temperature scaled) given the left
/// distribution. Returns right probabilities. kNone is plain softmax.
std::vector<double> apply_repulsion(
    std::span<const double> left_probs, std::span<const double> right_logits, RepelMode mode, double eta);

/// Per-layer diagnostics exposed by the soft forward pass.
struct ForwardDiagnostics {
    std::vector<std::vector<double>> routing;  // per layer, n_out x heads
    std::vector<std::vector<double>> gates;    // per layer, heads x 16
    std::vector<double> tau;
    std::vector<double> bandwidth;
};

/// Extra gradients with respect to diagnostic probabilities, used by the
/// regularizers. Empty vectors mean zero.
struct DiagnosticGrads {
    std::vector<std::vector<double>> routing;
    std::vector<std::vector<double>> gates;
};

/// Expectation-only forward pass over a batch of Boolean rows, retaining
/// what the backward pass needs.
class SoftForward {
   public:
    SoftForward(const StackParams &params, const StackSchedule &schedule);

    /// Runs the batch; rows are B-bit inputs stored row-major.
    void run(std::span<const uint8_t> inputs, size_t num_rows);
    /// Runs the full truth-table cube.
    void run_cube();

    const std::vector<double> &predictions() const {
        return pred_;
    }
    ForwardDiagnostics diagnostics() const;
    /// Soft wire values: entry 0 is the layer-1 (lifting) values, entry
    /// l + 1 is layer l's output wires; each is rows x width.
    const std::vector<std::vector<double>> &wire_values() const {
        return wires_;
    }
    /// Per-layer head outputs, rows x heads.
    const std::vector<std::vector<double>> &head_values() const {
        return heads_;
    }

    /// Gradient of sum_r d_pred[r] * pred[r] (+ extra diagnostic terms)
    /// with respect to params.values.
    std::vector<double> backward(std::span<const double> d_pred, const DiagnosticGrads *extra = nullptr) const;

   private:
    const StackParams &params_;
    StackSchedule schedule_;
    std::vector<LayerProbs> probs_;
    std::vector<double> lift_probs_;
    std::vector<std::array<double, kNumCorners>> head_mix_;  // per layer*head: m_h
    std::vector<InterpolantMode> modes_;
    size_t rows_ = 0;
    std::vector<uint8_t> inputs_;
    std::vector<std::vector<double>> wires_;
    std::vector<std::vector<double>> heads_;
    std::vector<std::vector<double>> a_, b_;         // rows x heads
    std::vector<std::vector<double>> phi_, da_, db_;  // rows x heads x 4
    std::vector<double> pred_;
    std::vector<size_t> head_offset_;
};

/// Convenience: predictions over the full cube.
std::vector<double> forward_soft(const StackParams &params, const StackSchedule &schedule);
std::vector<double> forward_soft(
    const StackParams &params, const StackSchedule &schedule, std::span<const uint8_t> inputs, size_t num_rows,
    ForwardDiagnostics *diag = nullptr);

/// Argmax-decoded discrete circuit plus per-head argmax gates.
struct DecodedStack {
    LayeredCircuit circuit;
    Expr expression = Expr::constant(false);
    /// Argmax gate id of every head, per layer.
    std::vector<std::vector<int>> head_gates;
    /// Head chosen by each output wire's mixer row, per layer.
    std::vector<std::vector<int>> wire_heads;
};

/// Ties break to the lowest index.
DecodedStack decode_argmax(const StackParams &params, const StackSchedule &schedule);

/// Gate ids along the readout path from the output back to layer 1: at each
/// node follow the left parent unless the gate ignores it.
std::vector<int> readout_path_gates(const LayeredCircuit &c);

/// Draws a full discrete circuit: lifting literal per wire, then per output
/// wire a head from the mixer row, its gate, left and right parents.
LayeredCircuit sample_circuit(const StackParams &params, const StackSchedule &schedule, Rng &rng);

/// Mutual information I((X_i, X_j); f(X)) in bits under uniform X.
double pair_mutual_information(const TruthTable &t, int i, int j);

/// Ordered pairs (i != j) over B bits ranked by MI, ties broken
/// lexicographically.
std::vector<std::array<int, 2>> ranked_mi_pairs(const TruthTable &t);

/// Pair priors for `heads` heads over `width` wires. Head h takes the
/// (h mod #pairs)-th ranked pair (i, j) and puts mass 1 - kPriorSmoothing on
/// wire i (left) and wire j (right), spreading the rest evenly. Returns
/// heads x width simplex rows; uniform rows when f is constant.
std::pair<std::vector<double>, std::vector<double>> mi_pair_priors(const TruthTable &t, int heads, int width);

nlohmann::json params_to_json(const StackParams &params, const StackSchedule &schedule);
StackParams params_from_json(const nlohmann::json &j, StackSchedule *schedule = nullptr);

}  // namespace sbc

#endif
