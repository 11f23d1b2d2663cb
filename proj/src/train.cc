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

#include "sbc/train.h"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <numbers>

namespace sbc {

void TrainConfig::validate() const {
    if (!(learning_rate > 0) || !(rho > 0 && rho < 1) || !(epsilon > 0)) {
        throw std::invalid_argument("optimizer rates must be positive (rho in (0, 1))");
    }
    if (max_steps < 1 || check_every < 1 || patience_checks < 1 || min_steps < 0) {
        throw std::invalid_argument("step counts must be positive");
    }
    if (!(t_min > 0) || t_min > t_max) {
        throw std::invalid_argument("temperatures need 0 < t_min <= t_max");
    }
    if (lam_ent < 0 || lam_div_units < 0 || lam_div_rows < 0 || lam_const16 < 0) {
        throw std::invalid_argument("regularizer weights must be nonnegative");
    }
    if (!(async_spread >= 0 && async_spread < 1)) {
        throw std::invalid_argument("async_spread must lie in [0, 1)");
    }
}

nlohmann::json TrainConfig::to_json() const {
    return {
        {"learning_rate", learning_rate},
        {"rho", rho},
        {"epsilon", epsilon},
        {"max_steps", max_steps},
        {"min_steps", min_steps},
        {"check_every", check_every},
        {"patience_checks", patience_checks},
        {"stop_on_perfect", stop_on_perfect},
        {"lam_ent", lam_ent},
        {"lam_div_units", lam_div_units},
        {"lam_div_rows", lam_div_rows},
        {"lam_const16", lam_const16},
        {"tau",
         {{"t_max", t_max},
          {"t_min", t_min},
          {"direction", direction == AnnealDirection::kTopDown ? "top_down" : "bottom_up"},
          {"schedule", shape == AnnealShape::kLinear ? "linear" : "cosine"},
          {"async_spread", async_spread},
          {"anneal_steps", anneal_steps}}},
        {"seed", seed},
    };
}

TrainConfig TrainConfig::from_json(const nlohmann::json &j) {
    return from_json(j, TrainConfig{});
}

TrainConfig TrainConfig::from_json(const nlohmann::json &j, TrainConfig c) {
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.rho = j.value("rho", c.rho);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.min_steps = j.value("min_steps", c.min_steps);
    c.check_every = j.value("check_every", c.check_every);
    c.patience_checks = j.value("patience_checks", c.patience_checks);
    c.stop_on_perfect = j.value("stop_on_perfect", c.stop_on_perfect);
    c.lam_ent = j.value("lam_ent", c.lam_ent);
    c.lam_div_units = j.value("lam_div_units", c.lam_div_units);
    c.lam_div_rows = j.value("lam_div_rows", c.lam_div_rows);
    c.lam_const16 = j.value("lam_const16", c.lam_const16);
    if (j.contains("tau")) {
        const auto &t = j.at("tau");
        c.t_max = t.value("t_max", c.t_max);
        c.t_min = t.value("t_min", c.t_min);
        if (t.contains("direction")) {
            auto d = t.at("direction").get<std::string>();
            if (d == "top_down") {
                c.direction = AnnealDirection::kTopDown;
            } else if (d == "bottom_up") {
                c.direction = AnnealDirection::kBottomUp;
            } else {
                throw std::invalid_argument("unknown anneal direction '" + d + "'");
            }
        }
        if (t.contains("schedule")) {
            auto s = t.at("schedule").get<std::string>();
            if (s == "linear") {
                c.shape = AnnealShape::kLinear;
            } else if (s == "cosine") {
                c.shape = AnnealShape::kCosine;
            } else {
                throw std::invalid_argument("unknown anneal schedule '" + s + "'");
            }
        }
        c.async_spread = t.value("async_spread", c.async_spread);
        c.anneal_steps = t.value("anneal_steps", c.anneal_steps);
    }
    c.seed = j.value("seed", c.seed);
    return c;
}

double tau_at(int step, int layer, int depth, const TrainConfig &config) {
    int horizon = config.anneal_steps > 0 ? config.anneal_steps : config.max_steps;
    double t = std::clamp(static_cast<double>(step) / horizon, 0.0, 1.0);
    double rank = 0;
    if (depth > 1) {
        int pos = config.direction == AnnealDirection::kTopDown ? layer : depth - 1 - layer;
        rank = static_cast<double>(pos) / (depth - 1);
    }
    double start = config.async_spread * rank;
    double r = std::clamp((t - start) / (1.0 - start), 0.0, 1.0);
    double shape = config.shape == AnnealShape::kLinear ? r : 0.5 * (1.0 - std::cos(std::numbers::pi * r));
    return config.t_max - (config.t_max - config.t_min) * shape;
}

double bandwidth_at(int layer, const StackConfig &config) {
    return layer_bandwidth(config, layer);
}

StackSchedule schedule_at(int step, const StackConfig &stack, const TrainConfig &config) {
    int depth = static_cast<int>(layer_shapes(stack).size());
    StackSchedule s;
    for (int l = 0; l < depth; l++) {
        s.tau.push_back(tau_at(step, l, depth, config));
        s.bandwidth.push_back(bandwidth_at(l, stack));
    }
    return s;
}

double bce_loss(std::span<const double> pred, const TruthTable &target, std::vector<double> *d_pred) {
    size_t n = target.size();
    if (pred.size() != n) {
        throw std::invalid_argument("prediction count does not match the table");
    }
    if (d_pred != nullptr) {
        d_pred->assign(n, 0.0);
    }
    double total = 0;
    for (size_t r = 0; r < n; r++) {
        double p = pred[r];
        bool clamped = false;
        if (p < kBceClamp) {
            p = kBceClamp;
            clamped = true;
        } else if (p > 1 - kBceClamp) {
            p = 1 - kBceClamp;
            clamped = true;
        }
        double y = target[r];
        total += -(y * std::log(p) + (1 - y) * std::log(1 - p));
        if (d_pred != nullptr && !clamped) {
            (*d_pred)[r] = (-y / p + (1 - y) / (1 - p)) / n;
        }
    }
    return total / n;
}

namespace {

double entropy_with_grad(std::span<const double> p, double scale, std::span<double> dp) {
    double h = 0;
    for (size_t i = 0; i < p.size(); i++) {
        if (p[i] > 0) {
            double lg = std::log(p[i]);
            h -= p[i] * lg;
            dp[i] += -scale * (lg + 1.0);
        }
    }
    return h;
}

double cosine_with_grad(
    std::span<const double> u, std::span<const double> v, double scale, std::span<double> du, std::span<double> dv) {
    double uv = 0, uu = 0, vv = 0;
    for (size_t i = 0; i < u.size(); i++) {
        uv += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    double nu = std::sqrt(uu), nv = std::sqrt(vv);
    if (nu == 0 || nv == 0) {
        return 0.0;
    }
    double c = uv / (nu * nv);
    for (size_t i = 0; i < u.size(); i++) {
        du[i] += scale * (v[i] / (nu * nv) - c * u[i] / uu);
        dv[i] += scale * (u[i] / (nu * nv) - c * v[i] / vv);
    }
    return c;
}

}  // namespace

LossResult loss_total(
    const StackParams &params, const StackSchedule &schedule, const TruthTable &table, const TrainConfig &config) {
    if (table.num_bits() != params.config.num_bits) {
        throw ConfigError("truth table width does not match the stack");
    }
    SoftForward fwd(params, schedule);
    fwd.run_cube();
    LossResult out;
    out.predictions = fwd.predictions();
    std::vector<double> d_pred;
    out.loss.bce = bce_loss(out.predictions, table, &d_pred);

    auto diag = fwd.diagnostics();
    DiagnosticGrads extra;
    size_t depth = diag.gates.size();
    extra.gates.resize(depth);
    extra.routing.resize(depth);
    for (size_t l = 0; l < depth; l++) {
        const auto &shape = params.layers[l].shape;
        const auto &q = diag.gates[l];
        const auto &mix = diag.routing[l];
        auto &dq = extra.gates[l];
        auto &dmix = extra.routing[l];
        dq.assign(q.size(), 0.0);
        dmix.assign(mix.size(), 0.0);
        auto qrow = [&](int h) { return std::span<const double>(q).subspan(static_cast<size_t>(h) * kNumGates, kNumGates); };
        auto dqrow = [&](int h) { return std::span<double>(dq).subspan(static_cast<size_t>(h) * kNumGates, kNumGates); };
        auto mrow = [&](int k) {
            return std::span<const double>(mix).subspan(static_cast<size_t>(k) * shape.heads, shape.heads);
        };
        auto dmrow = [&](int k) {
            return std::span<double>(dmix).subspan(static_cast<size_t>(k) * shape.heads, shape.heads);
        };
        if (config.lam_ent > 0) {
            for (int k = 0; k < shape.n_out; k++) {
                out.loss.ent += config.lam_ent * entropy_with_grad(mrow(k), config.lam_ent, dmrow(k));
            }
            for (int h = 0; h < shape.heads; h++) {
                out.loss.ent += config.lam_ent * entropy_with_grad(qrow(h), config.lam_ent, dqrow(h));
            }
        }
        if (config.lam_div_units > 0) {
            for (int s = 0; s < shape.heads; s++) {
                for (int t = s + 1; t < shape.heads; t++) {
                    out.loss.div_units +=
                        config.lam_div_units *
                        cosine_with_grad(qrow(s), qrow(t), config.lam_div_units, dqrow(s), dqrow(t));
                }
            }
        }
        if (config.lam_div_rows > 0) {
            for (int k = 0; k < shape.n_out; k++) {
                for (int k2 = k + 1; k2 < shape.n_out; k2++) {
                    out.loss.div_rows +=
                        config.lam_div_rows * cosine_with_grad(mrow(k), mrow(k2), config.lam_div_rows, dmrow(k), dmrow(k2));
                }
            }
        }
        if (config.lam_const16 > 0 && l + 1 < depth) {
            for (int h = 0; h < shape.heads; h++) {
                auto qr = qrow(h);
                auto dr = dqrow(h);
                out.loss.const16 += config.lam_const16 * (qr[kGateFalse - 1] + qr[kGateTrue - 1]);
                dr[kGateFalse - 1] += config.lam_const16;
                dr[kGateTrue - 1] += config.lam_const16;
            }
        }
    }
    out.loss.total = out.loss.bce + out.loss.ent + out.loss.div_units + out.loss.div_rows + out.loss.const16;
    out.grad = fwd.backward(d_pred, &extra);
    return out;
}

RmsProp::RmsProp(size_t size, double lr, double rho, double eps) : lr_(lr), rho_(rho), eps_(eps), v_(size, 0.0) {
}

void RmsProp::step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != v_.size() || grads.size() != v_.size()) {
        throw std::invalid_argument("optimizer state does not match parameter count");
    }
    for (size_t i = 0; i < v_.size(); i++) {
        double g = grads[i];
        v_[i] = rho_ * v_[i] + (1 - rho_) * g * g;
        params[i] -= lr_ * g / (std::sqrt(v_[i]) + eps_);
    }
}

double row_accuracy(std::span<const double> pred, const TruthTable &target) {
    size_t hits = 0;
    for (size_t r = 0; r < target.size(); r++) {
        hits += (pred[r] >= 0.5 ? 1 : 0) == target[r];
    }
    return static_cast<double>(hits) / target.size();
}

TrainResult train_instance(const TruthTable &table, const StackConfig &stack, const TrainConfig &config) {
    config.validate();
    Rng rng(config.seed);
    Rng init_rng = rng.split(1);
    StackParams params = init_params(stack, init_rng, &table);
    RmsProp opt(params.values.size(), config.learning_rate, config.rho, config.epsilon);

    TrainResult result;
    result.params = params;
    result.schedule = schedule_at(0, stack, config);
    double best_em = -1, best_dec = -1, best_acc = -1;
    int bad_checks = 0;
    int step = 0;
    result.stop_reason = "max_steps";
    for (step = 0; step < config.max_steps; step++) {
        auto schedule = schedule_at(step, stack, config);
        auto lr = loss_total(params, schedule, table, config);
        result.final_loss = lr.loss.total;
        if (!std::isfinite(lr.loss.total)) {
            result.nan_abort = true;
            result.stop_reason = "nan";
            break;
        }
        if (step >= config.min_steps && step % config.check_every == 0) {
            double acc = row_accuracy(lr.predictions, table);
            double em = acc == 1.0 ? 1.0 : 0.0;
            double dec_em = 0;
            if (em == 1.0) {
                auto dec = decode_argmax(params, schedule);
                dec_em = circuit_table(dec.circuit) == table ? 1.0 : 0.0;
            }
            if (std::tie(em, dec_em, acc) > std::tie(best_em, best_dec, best_acc)) {
                best_em = em;
                best_dec = dec_em;
                best_acc = acc;
                bad_checks = 0;
                result.params = params;
                result.schedule = schedule;
                result.best_step = step;
            } else {
                bad_checks++;
            }
            if (config.stop_on_perfect && em == 1.0 && dec_em == 1.0) {
                result.stop_reason = "perfect";
                break;
            }
            if (bad_checks >= config.patience_checks) {
                result.stop_reason = "patience";
                break;
            }
        }
        opt.step(params.values, lr.grad);
    }
    result.steps = step;
    if (best_em < 0) {
        // No check happened (or NaN before the first one): report the last state.
        auto schedule = schedule_at(std::min(step, config.max_steps), stack, config);
        if (!result.nan_abort) {
            result.params = params;
            result.schedule = schedule;
            result.best_step = step;
        }
    }
    auto pred = forward_soft(result.params, result.schedule);
    result.row_acc = row_accuracy(pred, table);
    result.em = result.row_acc == 1.0 ? 1.0 : 0.0;
    auto dec = decode_argmax(result.params, result.schedule);
    result.decoded_em = circuit_table(dec.circuit) == table ? 1.0 : 0.0;
    return result;
}

}  // namespace sbc
