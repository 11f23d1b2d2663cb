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

#include "sbc/diag.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sbc/expression.h"

namespace sbc {

double exact_match(std::span<const double> pred, const TruthTable &target) {
    if (pred.size() != target.size()) {
        throw std::invalid_argument("exact_match: prediction and target sizes differ");
    }
    for (size_t r = 0; r < pred.size(); r++) {
        if (static_cast<uint8_t>(pred[r] >= 0.5) != target[r]) {
            return 0.0;
        }
    }
    return 1.0;
}

double exact_match(const TruthTable &pred, const TruthTable &target) {
    if (pred.num_bits() != target.num_bits()) {
        throw std::invalid_argument("exact_match: tables have different widths");
    }
    return pred == target ? 1.0 : 0.0;
}

LayerTraces LayerTraces::from_rows(std::vector<double> values, size_t rows, int width) {
    if (values.size() != rows * static_cast<size_t>(width)) {
        throw std::invalid_argument("LayerTraces: values do not match rows x width");
    }
    return LayerTraces{rows, width, std::move(values)};
}

std::vector<double> LayerTraces::unit(int k) const {
    std::vector<double> u(rows);
    for (size_t r = 0; r < rows; r++) {
        u[r] = values[r * width + k];
    }
    return u;
}

bool bnr_exact(std::span<const double> u, int decimals) {
    double scale = std::pow(10.0, decimals);
    std::set<double> seen;
    for (double v : u) {
        seen.insert(std::nearbyint(v * scale));
        if (seen.size() > 2) {
            return false;
        }
    }
    return true;
}

namespace {

double lower_median(std::span<const double> sorted) {
    return sorted[(sorted.size() - 1) / 2];
}

}  // namespace

bool bnr_eps(std::span<const double> u, double eps) {
    if (u.empty()) {
        return true;
    }
    std::vector<double> v(u.begin(), u.end());
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    // Sorted split at k: [0, k) and [k, n), each centered on its lower median.
    auto spread = [&](size_t lo, size_t hi) {
        if (lo >= hi) {
            return 0.0;
        }
        double c = v[lo + (hi - lo - 1) / 2];
        return std::max(c - v[lo], v[hi - 1] - c);
    };
    for (size_t k = 1; k <= n; k++) {
        if (spread(0, k) <= eps && spread(k, n) <= eps) {
            return true;
        }
    }
    return false;
}

namespace {

template <typename Pred>
double layer_average(const std::vector<LayerTraces> &layers, Pred pred) {
    if (layers.empty()) {
        return 1.0;
    }
    double total = 0;
    for (const auto &layer : layers) {
        int pass = 0;
        for (int k = 0; k < layer.width; k++) {
            pass += pred(layer.unit(k));
        }
        total += layer.width > 0 ? static_cast<double>(pass) / layer.width : 1.0;
    }
    return total / static_cast<double>(layers.size());
}

}  // namespace

double bnr_density(const std::vector<LayerTraces> &layers, int decimals) {
    return layer_average(layers, [&](const std::vector<double> &u) { return bnr_exact(u, decimals); });
}

double bnr_eps_density(const std::vector<LayerTraces> &layers, double eps) {
    return layer_average(layers, [&](const std::vector<double> &u) { return bnr_eps(u, eps); });
}

std::vector<uint8_t> binarize(std::span<const double> u) {
    std::vector<uint8_t> out(u.size());
    if (u.empty()) {
        return out;
    }
    double t = u[0];
    for (size_t r = 0; r < u.size(); r++) {
        out[r] = u[r] >= t;
    }
    return out;
}

std::vector<std::vector<uint8_t>> binarize_layer(const LayerTraces &layer) {
    std::vector<std::vector<uint8_t>> out;
    for (int k = 0; k < layer.width; k++) {
        out.push_back(binarize(layer.unit(k)));
    }
    return out;
}

namespace {

// Constants, then single-input gates, then the genuinely binary gates.
constexpr std::array<int, kNumGates> kGateScanOrder{
    kGateFalse, kGateTrue, kGateProjA, kGateProjB, kGateNotA, kGateNotB, kGateAnd, kGateAAndNotB,
    kGateNotAAndB, kGateXor, kGateOr, kGateNor, kGateXnor, kGateAOrNotB, kGateNotAOrB, kGateNand};

}  // namespace

PrimMatch best_primitive(std::span<const uint8_t> target, const std::vector<std::vector<uint8_t>> &sources) {
    size_t rows = target.size();
    for (const auto &s : sources) {
        if (s.size() != rows) {
            throw std::invalid_argument("best_primitive: source length differs from target");
        }
    }
    double denom = rows > 0 ? static_cast<double>(rows) : 1.0;
    PrimMatch best;
    best.agreement = -1;
    int n = static_cast<int>(sources.size());
    // agree[pair][g]: rows where gate g on the pair matches the target.
    std::vector<std::array<long, kNumGates>> agree;
    std::vector<std::array<int, 2>> pairs;
    for (int i = 0; i < n; i++) {
        for (int j = 0; j < n; j++) {
            if (i == j) {
                continue;
            }
            std::array<std::array<long, 2>, kNumCorners> count{};
            for (size_t r = 0; r < rows; r++) {
                count[corner_index(sources[i][r], sources[j][r])][target[r] & 1]++;
            }
            std::array<long, kNumGates> per_gate{};
            for (int g = 1; g <= kNumGates; g++) {
                for (int c = 0; c < kNumCorners; c++) {
                    per_gate[g - 1] += count[c][gate_bit(g, c)];
                }
            }
            agree.push_back(per_gate);
            pairs.push_back({i, j});
        }
    }
    for (int g : kGateScanOrder) {
        for (size_t p = 0; p < pairs.size(); p++) {
            double a = agree[p][g - 1] / denom;
            if (a > best.agreement) {
                best = PrimMatch{a, g, pairs[p][0], pairs[p][1], false};
            }
        }
    }
    for (int i = 0; i < n; i++) {
        long same = 0;
        for (size_t r = 0; r < rows; r++) {
            same += sources[i][r] == target[r];
        }
        double a = same / denom;
        if (a > best.agreement) {
            best = PrimMatch{a, 0, i, i, false};
        }
        double na = (static_cast<long>(rows) - same) / denom;
        if (na > best.agreement) {
            best = PrimMatch{na, 0, i, i, true};
        }
    }
    if (best.agreement < 0) {
        best.agreement = 0;
    }
    return best;
}

namespace {

PrimRecovery recover_against(
    const std::vector<std::vector<uint8_t>> &units, const std::vector<std::vector<uint8_t>> &sources) {
    PrimRecovery out;
    for (const auto &u : units) {
        out.units.push_back(best_primitive(u, sources));
        out.hit += out.units.back().hit();
        out.best += out.units.back().agreement;
    }
    if (!units.empty()) {
        out.hit /= static_cast<double>(units.size());
        out.best /= static_cast<double>(units.size());
    }
    return out;
}

}  // namespace

PrimRecovery prim_recover_input(const std::vector<std::vector<uint8_t>> &units, int num_bits) {
    size_t rows = size_t{1} << num_bits;
    std::vector<std::vector<uint8_t>> inputs(num_bits, std::vector<uint8_t>(rows));
    for (size_t r = 0; r < rows; r++) {
        for (int j = 0; j < num_bits; j++) {
            inputs[j][r] = input_bit(r, num_bits, j);
        }
    }
    return recover_against(units, inputs);
}

std::array<long, kNumGates> LayerwiseRecovery::hit_histogram() const {
    std::array<long, kNumGates> h{};
    for (const auto &layer : layers) {
        for (const auto &m : layer.units) {
            if (m.hit() && m.gate > 0) {
                h[m.gate - 1]++;
            }
        }
    }
    return h;
}

LayerwiseRecovery prim_recover_layer(const std::vector<std::vector<std::vector<uint8_t>>> &layers) {
    if (layers.size() < 2) {
        throw std::invalid_argument("prim_recover_layer needs at least two layers");
    }
    LayerwiseRecovery out;
    for (size_t l = 1; l < layers.size(); l++) {
        out.layers.push_back(recover_against(layers[l], layers[l - 1]));
        out.hit += out.layers.back().hit;
        out.best += out.layers.back().best;
    }
    out.hit /= static_cast<double>(out.layers.size());
    out.best /= static_cast<double>(out.layers.size());
    return out;
}

GateHistograms &GateHistograms::operator+=(const GateHistograms &other) {
    for (int g = 0; g < kNumGates; g++) {
        sbc_all[g] += other.sbc_all[g];
        sbc_path[g] += other.sbc_path[g];
        mlp_all[g] += other.mlp_all[g];
    }
    return *this;
}

std::string GateHistograms::to_csv() const {
    std::ostringstream out;
    out << "gate,name,sbc_all,sbc_path,mlp_all\n";
    for (int g = 1; g <= kNumGates; g++) {
        out << g << ',' << gate_name(g) << ',' << sbc_all[g - 1] << ',' << sbc_path[g - 1] << ',' << mlp_all[g - 1]
            << '\n';
    }
    return out.str();
}

GateHistograms circuit_histograms(const LayeredCircuit &c) {
    GateHistograms h;
    for (const auto &layer : c.layers) {
        for (const auto &node : layer) {
            h.sbc_all[node.gate - 1]++;
        }
    }
    if (!c.layers.empty()) {
        for (int g : readout_path_gates(c)) {
            h.sbc_path[g - 1]++;
        }
    }
    return h;
}

nlohmann::json DiagReport::to_json() const {
    return {
        {"em", em},
        {"bnr_exact_l1", bnr_exact_l1},
        {"bnr_exact_all", bnr_exact_all},
        {"bnr_eps_l1", bnr_eps_l1},
        {"bnr_eps_all", bnr_eps_all},
        {"primHit_in", prim_hit_in},
        {"primBest_in", prim_best_in},
        {"primHit_layer_all", prim_hit_layer_all},
        {"primBest_layer_all", prim_best_layer_all},
        {"gate_histogram", gate_histogram},
        {"expr_tokens", expr_tokens},
    };
}

DiagReport DiagReport::from_json(const nlohmann::json &j) {
    DiagReport d;
    d.em = j.at("em").get<double>();
    d.bnr_exact_l1 = j.at("bnr_exact_l1").get<double>();
    d.bnr_exact_all = j.at("bnr_exact_all").get<double>();
    d.bnr_eps_l1 = j.at("bnr_eps_l1").get<double>();
    d.bnr_eps_all = j.at("bnr_eps_all").get<double>();
    d.prim_hit_in = j.at("primHit_in").get<double>();
    d.prim_best_in = j.at("primBest_in").get<double>();
    d.prim_hit_layer_all = j.at("primHit_layer_all").get<double>();
    d.prim_best_layer_all = j.at("primBest_layer_all").get<double>();
    d.gate_histogram = j.at("gate_histogram").get<std::array<long, kNumGates>>();
    d.expr_tokens = j.at("expr_tokens").get<int>();
    return d;
}

namespace {

void fill_trace_metrics(const std::vector<LayerTraces> &layers, int num_bits, DiagReport &d) {
    if (layers.empty()) {
        d.bnr_exact_l1 = d.bnr_exact_all = d.bnr_eps_l1 = d.bnr_eps_all = 1.0;
        return;
    }
    std::vector<LayerTraces> first{layers[0]};
    d.bnr_exact_l1 = bnr_density(first);
    d.bnr_eps_l1 = bnr_eps_density(first);
    d.bnr_exact_all = bnr_density(layers);
    d.bnr_eps_all = bnr_eps_density(layers);
    std::vector<std::vector<std::vector<uint8_t>>> bin;
    for (const auto &layer : layers) {
        bin.push_back(binarize_layer(layer));
    }
    auto in = prim_recover_input(bin[0], num_bits);
    d.prim_hit_in = in.hit;
    d.prim_best_in = in.best;
    if (bin.size() >= 2) {
        auto lw = prim_recover_layer(bin);
        d.prim_hit_layer_all = lw.hit;
        d.prim_best_layer_all = lw.best;
    }
}

}  // namespace

DiagReport diagnose_mlp(const MlpParams &params, const TruthTable &target) {
    auto fwd = mlp_forward_cube(params);
    DiagReport d;
    d.em = exact_match(fwd.predictions, target);
    std::vector<LayerTraces> layers;
    for (const auto &act : fwd.activations) {
        layers.push_back(LayerTraces::from_rows(act, target.size(), params.config.width));
    }
    fill_trace_metrics(layers, target.num_bits(), d);
    if (layers.size() >= 2) {
        std::vector<std::vector<std::vector<uint8_t>>> bin;
        for (const auto &layer : layers) {
            bin.push_back(binarize_layer(layer));
        }
        d.gate_histogram = prim_recover_layer(bin).hit_histogram();
    }
    return d;
}

DiagReport diagnose_circuit(const LayeredCircuit &c, const TruthTable &target) {
    DiagReport d;
    int b = target.num_bits();
    std::vector<LayerTraces> layers;
    for (const auto &layer : c.layers) {
        LayerTraces t;
        t.rows = target.size();
        t.width = static_cast<int>(layer.size());
        t.values.resize(t.rows * t.width);
        layers.push_back(std::move(t));
    }
    TruthTable out = TruthTable::zeros(b);
    for (size_t r = 0; r < target.size(); r++) {
        auto x = input_bits(r, b);
        auto values = circuit_node_values(c, x);
        for (size_t l = 0; l < layers.size(); l++) {
            for (int k = 0; k < layers[l].width; k++) {
                layers[l].values[r * layers[l].width + k] = values[l + 1][k];
            }
        }
        out[r] = values.back().at(0);
    }
    d.em = exact_match(out, target);
    fill_trace_metrics(layers, b, d);
    d.gate_histogram = circuit_histograms(c).sbc_all;
    d.expr_tokens = expr_tokens(circuit_expression(c));
    return d;
}

DiagReport diagnose_sbc(const StackParams &params, const StackSchedule &schedule, const TruthTable &target) {
    auto decoded = decode_argmax(params, schedule);
    DiagReport d = diagnose_circuit(decoded.circuit, target);
    d.em = exact_match(forward_soft(params, schedule), target);
    d.expr_tokens = expr_tokens(decoded.expression);
    return d;
}

}  // namespace sbc
