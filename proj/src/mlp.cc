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


#include "sbc/mlp.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <tuple>

namespace sbc {

std::string_view regime_name(MatchRegime r) {
    switch (r) {
        case MatchRegime::kNeuron:
            return "neuron";
        case MatchRegime::kParamSoft:
            return "param_soft";
        case MatchRegime::kParamTotal:
            return "param_total";
    }
    return "?";
}

MatchRegime regime_from_name(std::string_view name) {
    for (auto r : {MatchRegime::kNeuron, MatchRegime::kParamSoft, MatchRegime::kParamTotal}) {
        if (name == regime_name(r)) {
            return r;
        }
    }
    throw std::invalid_argument("unknown match regime '" + std::string(name) + "'");
}

void MlpConfig::validate() const {
    if (input_dim < 1 || width < 1 || depth < 1) {
        throw std::invalid_argument("mlp input_dim, width and depth must be positive");
    }
}

nlohmann::json MlpConfig::to_json() const {
    return {{"input_dim", input_dim}, {"width", width}, {"depth", depth}, {"regime", regime_name(regime)}};
}

MlpConfig MlpConfig::from_json(const nlohmann::json &j) {
    MlpConfig c;
    c.input_dim = j.at("input_dim").get<int>();
    c.width = j.at("width").get<int>();
    c.depth = j.at("depth").get<int>();
    c.regime = regime_from_name(j.value("regime", std::string("neuron")));
    c.validate();
    return c;
}

size_t mlp_param_count(int input_dim, int width, int depth) {
    size_t b = input_dim, h = width, l = depth;
    return (b + 1) * h + (l - 1) * (h + 1) * h + (h + 1);
}

size_t primitive_count(const StackConfig &config) {
    size_t n = 0;
    for (const auto &s : layer_shapes(config)) {
        n += static_cast<size_t>(kNumGates) * s.heads;
    }
    return n;
}

WidthMatch match_width(MatchRegime regime, const StackConfig &stack, size_t sbc_trainable, size_t primitives) {
    WidthMatch out;
    out.config.input_dim = stack.num_bits;
    out.config.depth = static_cast<int>(layer_shapes(stack).size());
    out.config.regime = regime;
    if (regime == MatchRegime::kNeuron) {
        out.config.width = stack.heads;
        return out;
    }
    size_t budget = sbc_trainable + (regime == MatchRegime::kParamTotal ? primitives : 0);
    int b = stack.num_bits, l = out.config.depth;
    if (mlp_param_count(b, 1, l) > budget) {
        out.config.width = 1;
        out.floored = true;
        return out;
    }
    int lo = 1, hi = 2;
    while (mlp_param_count(b, hi, l) <= budget) {
        lo = hi;
        hi *= 2;
    }
    while (hi - lo > 1) {
        int mid = lo + (hi - lo) / 2;
        (mlp_param_count(b, mid, l) <= budget ? lo : hi) = mid;
    }
    out.config.width = lo;
    return out;
}

int MlpParams::layer_in(int layer) const {
    return layer == 0 ? config.input_dim : config.width;
}

int MlpParams::layer_out(int layer) const {
    return layer == config.depth ? 1 : config.width;
}

size_t MlpParams::weight_offset(int layer) const {
    size_t off = 0;
    for (int l = 0; l < layer; l++) {
        off += static_cast<size_t>(layer_out(l)) * (layer_in(l) + 1);
    }
    return off;
}

size_t MlpParams::bias_offset(int layer) const {
    return weight_offset(layer) + static_cast<size_t>(layer_out(layer)) * layer_in(layer);
}

MlpParams mlp_init(const MlpConfig &config, Rng &rng) {
    config.validate();
    MlpParams p;
    p.config = config;
    p.values.resize(mlp_param_count(config.input_dim, config.width, config.depth));
    for (int l = 0; l <= config.depth; l++) {
        double bound = 1.0 / std::sqrt(static_cast<double>(p.layer_in(l)));
        size_t begin = p.weight_offset(l), end = p.bias_offset(l) + p.layer_out(l);
        for (size_t i = begin; i < end; i++) {
            p.values[i] = bound * (2 * rng.uniform() - 1);
        }
    }
    return p;
}

namespace {

double sigmoid(double z) {
    if (z >= 0) {
        return 1 / (1 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1 + e);
}

// Pre-activations per layer are kept for the backward pass.
struct Tape {
    MlpForward out;
    std::vector<std::vector<double>> pre;
};

Tape run(const MlpParams &p, std::span<const uint8_t> inputs, size_t rows) {
    int depth = p.config.depth;
    int b = p.config.input_dim;
    if (inputs.size() != rows * b) {
        throw std::invalid_argument("mlp input batch has the wrong size");
    }
    Tape t;
    std::vector<double> cur(inputs.begin(), inputs.end());
    for (int l = 0; l <= depth; l++) {
        int n_in = p.layer_in(l), n_out = p.layer_out(l);
        const double *w = &p.values[p.weight_offset(l)];
        const double *bias = &p.values[p.bias_offset(l)];
        std::vector<double> z(rows * n_out);
        for (size_t r = 0; r < rows; r++) {
            for (int o = 0; o < n_out; o++) {
                double s = bias[o];
                for (int i = 0; i < n_in; i++) {
                    s += w[o * n_in + i] * cur[r * n_in + i];
                }
                z[r * n_out + o] = s;
            }
        }
        if (l == depth) {
            t.out.logits = z;
            t.out.predictions.resize(rows);
            for (size_t r = 0; r < rows; r++) {
                t.out.predictions[r] = sigmoid(z[r]);
            }
        } else {
            std::vector<double> a(z.size());
            for (size_t i = 0; i < z.size(); i++) {
                a[i] = std::max(0.0, z[i]);
            }
            t.pre.push_back(std::move(z));
            t.out.activations.push_back(a);
            cur = std::move(a);
        }
    }
    return t;
}

std::vector<uint8_t> cube_inputs(int b) {
    size_t rows = size_t{1} << b;
    std::vector<uint8_t> x(rows * b);
    for (size_t r = 0; r < rows; r++) {
        for (int j = 0; j < b; j++) {
            x[r * b + j] = input_bit(r, b, j);
        }
    }
    return x;
}

}  // namespace

MlpForward mlp_forward(const MlpParams &params, std::span<const uint8_t> inputs, size_t rows) {
    return run(params, inputs, rows).out;
}

MlpForward mlp_forward_cube(const MlpParams &params) {
    int b = params.config.input_dim;
    return mlp_forward(params, cube_inputs(b), size_t{1} << b);
}

MlpLoss mlp_loss(const MlpParams &p, const TruthTable &table) {
    int b = p.config.input_dim;
    if (table.num_bits() != b) {
        throw std::invalid_argument("truth table width does not match the mlp");
    }
    size_t rows = table.size();
    auto inputs = cube_inputs(b);
    auto tape = run(p, inputs, rows);
    MlpLoss out;
    out.grad.assign(p.values.size(), 0.0);
    int depth = p.config.depth;

    // d(mean BCE)/d(logit) = (sigmoid(z) - y) / rows.
    std::vector<double> delta(rows);
    for (size_t r = 0; r < rows; r++) {
        double z = tape.out.logits[r];
        double y = table[r];
        out.bce += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
        delta[r] = (tape.out.predictions[r] - y) / rows;
    }
    out.bce /= rows;

    for (int l = depth; l >= 0; l--) {
        int n_in = p.layer_in(l), n_out = p.layer_out(l);
        const double *w = &p.values[p.weight_offset(l)];
        double *gw = &out.grad[p.weight_offset(l)];
        double *gb = &out.grad[p.bias_offset(l)];
        std::vector<double> in_vals;
        if (l == 0) {
            in_vals.assign(inputs.begin(), inputs.end());
        }
        const std::vector<double> &in = l == 0 ? in_vals : tape.out.activations[l - 1];
        std::vector<double> d_in(l > 0 ? rows * n_in : 0, 0.0);
        for (size_t r = 0; r < rows; r++) {
            for (int o = 0; o < n_out; o++) {
                double d = delta[r * n_out + o];
                if (d == 0) {
                    continue;
                }
                gb[o] += d;
                for (int i = 0; i < n_in; i++) {
                    gw[o * n_in + i] += d * in[r * n_in + i];
                    if (l > 0) {
                        d_in[r * n_in + i] += d * w[o * n_in + i];
                    }
                }
            }
        }
        if (l > 0) {
            const auto &z = tape.pre[l - 1];
            for (size_t i = 0; i < d_in.size(); i++) {
                if (z[i] <= 0) {
                    d_in[i] = 0;
                }
            }
            delta = std::move(d_in);
        }
    }
    out.forward = std::move(tape.out);
    return out;
}

MlpTrainResult mlp_train(const TruthTable &table, const MlpConfig &config, const TrainConfig &train) {
    train.validate();
    config.validate();
    Rng rng(train.seed);
    Rng init_rng = rng.split(2);
    MlpParams params = mlp_init(config, init_rng);
    RmsProp opt(params.values.size(), train.learning_rate, train.rho, train.epsilon);

    MlpTrainResult result;
    result.params = params;
    result.stop_reason = "max_steps";
    double best_em = -1, best_acc = -1;
    int bad_checks = 0;
    int step = 0;
    for (step = 0; step < train.max_steps; step++) {
        auto loss = mlp_loss(params, table);
        result.final_loss = loss.bce;
        if (!std::isfinite(loss.bce)) {
            result.nan_abort = true;
            result.stop_reason = "nan";
            break;
        }
        if (step >= train.min_steps && step % train.check_every == 0) {
            double acc = row_accuracy(loss.forward.predictions, table);
            double em = acc == 1.0 ? 1.0 : 0.0;
            if (std::tie(em, acc) > std::tie(best_em, best_acc)) {
                best_em = em;
                best_acc = acc;
                bad_checks = 0;
                result.params = params;
                result.best_step = step;
            } else {
                bad_checks++;
            }
            if (train.stop_on_perfect && em == 1.0) {
                result.stop_reason = "perfect";
                break;
            }
            if (bad_checks >= train.patience_checks) {
                result.stop_reason = "patience";
                break;
            }
        }
        opt.step(params.values, loss.grad);
    }
    result.steps = step;
    if (best_em < 0 && !result.nan_abort) {
        result.params = params;
        result.best_step = step;
    }
    auto fwd = mlp_forward_cube(result.params);
    result.row_acc = row_accuracy(fwd.predictions, table);
    result.em = result.row_acc == 1.0 ? 1.0 : 0.0;
    result.activations = std::move(fwd.activations);
    return result;
}

nlohmann::json mlp_params_to_json(const MlpParams &params) {
    return {{"config", params.config.to_json()}, {"values", params.values}};
}

MlpParams mlp_params_from_json(const nlohmann::json &j) {
    MlpParams p;
    p.config = MlpConfig::from_json(j.at("config"));
    p.values = j.at("values").get<std::vector<double>>();
    if (p.values.size() != mlp_param_count(p.config.input_dim, p.config.width, p.config.depth)) {
        throw std::invalid_argument("mlp checkpoint has the wrong parameter count");
    }
    return p;
}

double relu_bnr_failure_trial(int num_bits, int trials, Rng &rng) {
    if (num_bits < 3) {
        throw std::invalid_argument("relu_bnr_failure_trial needs at least 3 bits");
    }
    if (trials < 1) {
        throw std::invalid_argument("trials must be positive");
    }
    int failures = 0;
    for (int t = 0; t < trials; t++) {
        std::set<double> values{0.0};
        for (int i = 0; i < num_bits; i++) {
            values.insert(std::max(0.0, rng.normal()));
        }
        failures += values.size() >= 3;
    }
    return static_cast<double>(failures) / trials;
}

}  // namespace sbc
