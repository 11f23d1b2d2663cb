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


#ifndef SBC_MLP_H
#define SBC_MLP_H

#include <string>
#include <vector>

#include "json.hpp"
#include "sbc/stack.h"
#include "sbc/stochastic.h"
#include "sbc/train.h"
#include "sbc/truth_table.h"

namespace sbc {

enum class MatchRegime { kNeuron, kParamSoft, kParamTotal };

std::string_view regime_name(MatchRegime r);
MatchRegime regime_from_name(std::string_view name);

/// ReLU network with `depth` hidden layers of `width` units and a sigmoid
/// output unit.
struct MlpConfig {
    int input_dim = 0;
    int width = 1;
    int depth = 1;
    MatchRegime regime = MatchRegime::kNeuron;

    /// Throws std::invalid_argument unless all sizes are positive.
    void validate() const;
    nlohmann::json to_json() const;
    static MlpConfig from_json(const nlohmann::json &j);
};

/// (B + 1) H + (L - 1)(H + 1) H + (H + 1).
size_t mlp_param_count(int input_dim, int width, int depth);

/// 16 gate basis elements per head per layer.
size_t primitive_count(const StackConfig &config);

struct WidthMatch {
    MlpConfig config;
    /// True when no width fits the budget and H was floored to 1.
    bool floored = false;
};

/// neuron: H = heads, depth = stack depth. param_soft / param_total: the
/// largest H whose parameter count fits sbc_trainable (plus primitives).
WidthMatch match_width(MatchRegime regime, const StackConfig &stack, size_t sbc_trainable, size_t primitives);

/// Flat parameters; layer l holds a row-major (out x in) weight matrix
/// followed by its bias.
struct MlpParams {
    MlpConfig config;
    std::vector<double> values;

    size_t weight_offset(int layer) const;
    size_t bias_offset(int layer) const;
    int layer_in(int layer) const;
    int layer_out(int layer) const;
};

/// W and b uniform in +-1/sqrt(fan_in).
MlpParams mlp_init(const MlpConfig &config, Rng &rng);

struct MlpForward {
    std::vector<double> logits;       // rows
    std::vector<double> predictions;  // sigmoid(logits)
    /// Post-ReLU activations per hidden layer, rows x width.
    std::vector<std::vector<double>> activations;
};

MlpForward mlp_forward(const MlpParams &params, std::span<const uint8_t> inputs, size_t rows);
MlpForward mlp_forward_cube(const MlpParams &params);

struct MlpLoss {
    double bce = 0;
    std::vector<double> grad;
    MlpForward forward;
};

/// Mean BCE over the full table, computed from logits, and its gradient.
MlpLoss mlp_loss(const MlpParams &params, const TruthTable &table);

struct MlpTrainResult {
    MlpParams params;  // best checkpoint
    double em = 0;
    double row_acc = 0;
    int steps = 0;
    int best_step = 0;
    double final_loss = 0;
    bool nan_abort = false;
    std::string stop_reason;
    /// Hidden activations of the best checkpoint over the full table.
    std::vector<std::vector<double>> activations;
};

/// RMSProp with the early-stopping rules of train_instance. Only the
/// optimizer, step, and seed fields of `train` are used; stop_on_perfect
/// stops at the first check with EM = 1.
MlpTrainResult mlp_train(const TruthTable &table, const MlpConfig &config, const TrainConfig &train);

nlohmann::json mlp_params_to_json(const MlpParams &params);
MlpParams mlp_params_from_json(const nlohmann::json &j);

/// Fraction of `trials` standard-normal weight vectors a in R^B for which
/// ReLU(a . x) takes at least 3 distinct values over {0, e_1, ..., e_B}.
double relu_bnr_failure_trial(int num_bits, int trials, Rng &rng);

}  // namespace sbc

#endif
