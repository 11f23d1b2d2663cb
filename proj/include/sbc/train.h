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

#ifndef SBC_TRAIN_H
#define SBC_TRAIN_H

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbc/stack.h"
#include "sbc/truth_table.h"

namespace sbc {

enum class AnnealDirection { kTopDown, kBottomUp };
enum class AnnealShape { kLinear, kCosine };

/// BCE predictions are clamped to [kBceClamp, 1 - kBceClamp].
constexpr double kBceClamp = 1e-7;

struct TrainConfig {
    double learning_rate = 0.05;
    double rho = 0.9;
    double epsilon = 1e-8;
    int max_steps = 5000;
    int min_steps = 500;
    int check_every = 100;
    int patience_checks = 10;
    /// Stop at a check where the soft table and the decoded circuit both
    /// match the target exactly.
    bool stop_on_perfect = true;
    double lam_ent = 1e-3;
    double lam_div_units = 1e-3;
    double lam_div_rows = 1e-3;
    double lam_const16 = 0.0;
    double t_max = 2.0;
    double t_min = 0.1;
    AnnealDirection direction = AnnealDirection::kTopDown;
    AnnealShape shape = AnnealShape::kLinear;
    /// Fraction of the anneal horizon by which the last-annealed layer lags
    /// the first one.
    double async_spread = 0.5;
    /// Steps over which temperatures reach t_min; 0 means max_steps.
    int anneal_steps = 0;
    uint64_t seed = 0;

    /// Throws std::invalid_argument on non-positive rates or t_min > t_max.
    void validate() const;
    nlohmann::json to_json() const;
    /// Fields missing from `j` keep their values in `base`.
    static TrainConfig from_json(const nlohmann::json &j, TrainConfig base);
    static TrainConfig from_json(const nlohmann::json &j);
};

/// Layer temperature at `step`. Layer l starts annealing once the progress
/// step / horizon passes spread * l / (L - 1) (top_down; bottom_up mirrors
/// the layer order) and reaches t_min at the end of the horizon.
double tau_at(int step, int layer, int depth, const TrainConfig &config);

/// Linear interpolant bandwidth for `layer` of a stack.
double bandwidth_at(int layer, const StackConfig &config);

StackSchedule schedule_at(int step, const StackConfig &stack, const TrainConfig &config);

struct LossBreakdown {
    double total = 0;
    double bce = 0;
    double ent = 0;
    double div_units = 0;
    double div_rows = 0;
    double const16 = 0;
};

struct LossResult {
    LossBreakdown loss;
    std::vector<double> grad;
    std::vector<double> predictions;
};

/// Mean binary cross entropy of clamped predictions.
double bce_loss(std::span<const double> pred, const TruthTable &target, std::vector<double> *d_pred = nullptr);

/// Full objective (BCE plus the four regularizers) on the whole truth table
/// and its exact gradient with respect to params.values.
LossResult loss_total(
    const StackParams &params, const StackSchedule &schedule, const TruthTable &table, const TrainConfig &config);

/// RMSProp: v <- rho v + (1 - rho) g^2; p <- p - lr g / (sqrt(v) + eps).
class RmsProp {
   public:
    RmsProp(size_t size, double lr, double rho, double eps);
    void step(std::span<double> params, std::span<const double> grads);
    const std::vector<double> &state() const {
        return v_;
    }

   private:
    double lr_, rho_, eps_;
    std::vector<double> v_;
};

/// Fraction of rows where the 0.5-thresholded prediction matches.
double row_accuracy(std::span<const double> pred, const TruthTable &target);

struct TrainResult {
    StackParams params;      // best checkpoint
    StackSchedule schedule;  // schedule at the best checkpoint
    double em = 0;           // soft EM at the best checkpoint
    double row_acc = 0;
    double decoded_em = 0;
    int steps = 0;
    int best_step = 0;
    double final_loss = 0;
    bool nan_abort = false;
    std::string stop_reason;
};

TrainResult train_instance(const TruthTable &table, const StackConfig &stack, const TrainConfig &config);

}  // namespace sbc

#endif
