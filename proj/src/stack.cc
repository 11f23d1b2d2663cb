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

#include "sbc/stack.h"

#include <algorithm>
#include <cmath>
#include <map>

namespace sbc {

namespace {

constexpr double kRepelFloor = 1e-12;

size_t argmax(std::span<const double> v) {
    size_t best = 0;
    for (size_t i = 1; i < v.size(); i++) {
        if (v[i] > v[best]) {
            best = i;
        }
    }
    return best;
}

}  // namespace

std::string_view route_name(PairRoute r) {
    switch (r) {
        case PairRoute::kLearned:
            return "learned";
        case PairRoute::kMiSoft:
            return "mi_soft";
        case PairRoute::kMiHard:
            return "mi_hard";
    }
    return "?";
}

PairRoute route_from_name(std::string_view name) {
    if (name == "learned") {
        return PairRoute::kLearned;
    }
    if (name == "mi_soft") {
        return PairRoute::kMiSoft;
    }
    if (name == "mi_hard") {
        return PairRoute::kMiHard;
    }
    throw ConfigError("unknown pair route '" + std::string(name) + "'");
}

std::string_view repel_name(RepelMode m) {
    switch (m) {
        case RepelMode::kNone:
            return "none";
        case RepelMode::kLog:
            return "log";
        case RepelMode::kHardLog:
            return "hard-log";
        case RepelMode::kMul:
            return "mul";
        case RepelMode::kHardMul:
            return "hard-mul";
    }
    return "?";
}

RepelMode repel_from_name(std::string_view name) {
    for (auto m : {RepelMode::kNone, RepelMode::kLog, RepelMode::kHardLog, RepelMode::kMul, RepelMode::kHardMul}) {
        if (repel_name(m) == name) {
            return m;
        }
    }
    throw ConfigError("unknown repel mode '" + std::string(name) + "'");
}

int StackConfig::b_eff() const {
    if (!use_lifting) {
        return num_bits;
    }
    return lift_width > 0 ? lift_width : 2 * num_bits;
}

InterpolantMode StackConfig::interpolant(double bandwidth) const {
    InterpolantMode m;
    m.kind = sigma16;
    m.bandwidth = bandwidth;
    m.radius = radius;
    return m;
}

void StackConfig::validate() const {
    if (num_bits < 1) {
        throw ConfigError("num_bits must be positive");
    }
    if (heads < 1) {
        throw ConfigError("heads must be at least 1");
    }
    if (tree_widths.empty()) {
        if (depth < 2) {
            throw ConfigError("depth must be at least 2");
        }
        if (b_eff() < 2) {
            throw ConfigError("effective input width must be at least 2");
        }
    } else {
        if (static_cast<int>(tree_widths.size()) != depth) {
            throw ConfigError("tree_widths length must equal depth");
        }
        if (tree_widths.back() != 1) {
            throw ConfigError("tree_widths must end in 1");
        }
        for (int w : tree_widths) {
            if (w < 1) {
                throw ConfigError("tree widths must be positive");
            }
        }
    }
    if (route == PairRoute::kMiSoft && !(prior_strength >= 0)) {
        throw ConfigError("prior_strength must be nonnegative");
    }
    if (sigma16 == InterpolantKind::kRbf && (!(s_start > 0) || !(s_end > 0))) {
        throw ConfigError("rbf bandwidths must be positive");
    }
    if (sigma16 == InterpolantKind::kBump && !(radius > 0 && radius < 1)) {
        throw ConfigError("bump radius must lie in (0, 1)");
    }
    if (!(init_scale >= 0)) {
        throw ConfigError("init_scale must be nonnegative");
    }
}

nlohmann::json StackConfig::to_json() const {
    return {
        {"num_bits", num_bits},
        {"use_lifting", use_lifting},
        {"lift_width", lift_width},
        {"heads", heads},
        {"depth", depth},
        {"sigma16", {{"mode", interpolant_name(sigma16)}, {"s_start", s_start}, {"s_end", s_end}, {"radius", radius}}},
        {"pair",
         {{"route", route_name(route)},
          {"prior_strength", prior_strength},
          {"repel", repel},
          {"mode", repel_name(repel_mode)},
          {"eta", repel_eta}}},
        {"init_scale", init_scale},
        {"tree_widths", tree_widths},
    };
}

StackConfig StackConfig::from_json(const nlohmann::json &j) {
    StackConfig c;
    c.num_bits = j.value("num_bits", c.num_bits);
    c.use_lifting = j.value("use_lifting", c.use_lifting);
    c.lift_width = j.value("lift_width", c.lift_width);
    c.heads = j.value("heads", c.heads);
    c.depth = j.value("depth", c.depth);
    if (j.contains("sigma16")) {
        const auto &s = j.at("sigma16");
        if (s.is_string()) {
            c.sigma16 = interpolant_from_name(s.get<std::string>());
        } else if (s.contains("mode")) {
            c.sigma16 = interpolant_from_name(s.at("mode").get<std::string>());
        }
        if (s.is_object()) {
            c.s_start = s.value("s_start", c.s_start);
            c.s_end = s.value("s_end", c.s_end);
            c.radius = s.value("radius", c.radius);
        }
    }
    if (j.contains("pair")) {
        const auto &p = j.at("pair");
        if (p.contains("route")) {
            c.route = route_from_name(p.at("route").get<std::string>());
        }
        c.prior_strength = p.value("prior_strength", c.prior_strength);
        c.repel = p.value("repel", c.repel);
        if (p.contains("mode")) {
            c.repel_mode = repel_from_name(p.at("mode").get<std::string>());
        }
        c.repel_eta = p.value("eta", c.repel_eta);
    }
    c.init_scale = j.value("init_scale", c.init_scale);
    if (j.contains("tree_widths")) {
        c.tree_widths = j.at("tree_widths").get<std::vector<int>>();
    }
    return c;
}

std::vector<LayerShape> layer_shapes(const StackConfig &config) {
    std::vector<LayerShape> out;
    int n_in = config.b_eff();
    if (!config.tree_widths.empty()) {
        for (int w : config.tree_widths) {
            out.push_back({n_in, w, w});
            n_in = w;
        }
        return out;
    }
    for (int l = 0; l < config.depth; l++) {
        int n_out = l + 1 == config.depth ? 1 : 2;
        out.push_back({n_in, n_out, config.heads});
        n_in = n_out;
    }
    return out;
}

std::vector<NamedTensor> StackParams::tensors() const {
    std::vector<NamedTensor> out;
    if (lift >= 0) {
        out.push_back({"lift", lift, config.b_eff(), 2 * config.num_bits});
    }
    for (size_t l = 0; l < layers.size(); l++) {
        const auto &lp = layers[l];
        std::string p = "layer" + std::to_string(l) + ".";
        if (lp.pair_left >= 0) {
            out.push_back({p + "pair_left", lp.pair_left, lp.shape.heads, lp.shape.n_in});
            out.push_back({p + "pair_right", lp.pair_right, lp.shape.heads, lp.shape.n_in});
        }
        out.push_back({p + "gate", lp.gate, lp.shape.heads, kNumGates});
        out.push_back({p + "mixer", lp.mixer, lp.shape.n_out, lp.shape.heads});
    }
    return out;
}

StackParams allocate_params(const StackConfig &config) {
    config.validate();
    StackParams p;
    p.config = config;
    long next = 0;
    auto take = [&](long n) {
        long at = next;
        next += n;
        return at;
    };
    if (config.use_lifting) {
        p.lift = take(static_cast<long>(config.b_eff()) * 2 * config.num_bits);
    }
    auto shapes = layer_shapes(config);
    for (size_t l = 0; l < shapes.size(); l++) {
        LayerParams lp;
        lp.shape = shapes[l];
        bool fixed = l == 0 && config.route == PairRoute::kMiHard;
        if (!fixed) {
            lp.pair_left = take(static_cast<long>(lp.shape.heads) * lp.shape.n_in);
            lp.pair_right = take(static_cast<long>(lp.shape.heads) * lp.shape.n_in);
        }
        lp.gate = take(static_cast<long>(lp.shape.heads) * kNumGates);
        lp.mixer = take(static_cast<long>(lp.shape.n_out) * lp.shape.heads);
        p.layers.push_back(std::move(lp));
    }
    p.values.assign(next, 0.0);
    return p;
}

StackParams init_params(const StackConfig &config, Rng &rng, const TruthTable *table) {
    StackParams p = allocate_params(config);
    for (auto &v : p.values) {
        v = config.init_scale * rng.normal();
    }
    if (config.route == PairRoute::kLearned) {
        return p;
    }
    if (table == nullptr) {
        throw ConfigError("MI pair routes need the truth table");
    }
    if (table->num_bits() != config.num_bits) {
        throw ConfigError("truth table width does not match num_bits");
    }
    auto &l0 = p.layers[0];
    int heads = l0.shape.heads;
    int width = l0.shape.n_in;
    if (config.route == PairRoute::kMiHard) {
        auto ranked = ranked_mi_pairs(*table);
        for (int h = 0; h < heads; h++) {
            const auto &pr = ranked[h % ranked.size()];
            l0.fixed_pairs.push_back({pr[0], pr[1]});
        }
        return p;
    }
    if (table->is_constant()) {
        return p;
    }
    auto [left, right] = mi_pair_priors(*table, heads, width);
    l0.left_prior.resize(left.size());
    l0.right_prior.resize(right.size());
    for (size_t i = 0; i < left.size(); i++) {
        l0.left_prior[i] = config.prior_strength * std::log(left[i]);
        l0.right_prior[i] = config.prior_strength * std::log(right[i]);
    }
    return p;
}

double layer_bandwidth(const StackConfig &config, int layer) {
    int depth = static_cast<int>(layer_shapes(config).size());
    if (config.sigma16 == InterpolantKind::kBump) {
        return config.radius;
    }
    if (depth <= 1) {
        return config.s_start;
    }
    return config.s_start + static_cast<double>(layer) / (depth - 1) * (config.s_end - config.s_start);
}

StackSchedule StackSchedule::constant(int depth, double tau, double bandwidth) {
    return {std::vector<double>(depth, tau), std::vector<double>(depth, bandwidth)};
}

StackSchedule StackSchedule::for_config(const StackConfig &config, double tau) {
    int depth = static_cast<int>(layer_shapes(config).size());
    StackSchedule s;
    for (int l = 0; l < depth; l++) {
        s.tau.push_back(tau);
        s.bandwidth.push_back(layer_bandwidth(config, l));
    }
    return s;
}

std::vector<double> apply_repulsion(
    std::span<const double> left_probs, std::span<const double> right_logits, RepelMode mode, double eta) {
    size_t n = right_logits.size();
    if (left_probs.size() != n) {
        throw std::invalid_argument("repulsion needs matching left and right widths");
    }
    if (mode == RepelMode::kNone) {
        return softmax(right_logits);
    }
    std::vector<uint8_t> mask(n, 0);
    if (mode == RepelMode::kHardLog || mode == RepelMode::kHardMul) {
        mask[argmax(left_probs)] = 1;
    }
    auto uniform_unmasked = [&]() {
        std::vector<double> out(n, 0.0);
        size_t free = std::count(mask.begin(), mask.end(), uint8_t{0});
        for (size_t i = 0; i < n; i++) {
            out[i] = free == 0 ? 1.0 / n : (mask[i] ? 0.0 : 1.0 / free);
        }
        return out;
    };
    if (mode == RepelMode::kLog || mode == RepelMode::kHardLog) {
        std::vector<double> z(n);
        double mx = -INFINITY;
        for (size_t i = 0; i < n; i++) {
            if (mask[i]) {
                z[i] = -INFINITY;
                continue;
            }
            z[i] = right_logits[i] + eta * std::log(std::max(1.0 - left_probs[i], kRepelFloor));
            mx = std::max(mx, z[i]);
        }
        if (!std::isfinite(mx)) {
            return uniform_unmasked();
        }
        std::vector<double> out(n, 0.0);
        double total = 0;
        for (size_t i = 0; i < n; i++) {
            if (!mask[i]) {
                out[i] = std::exp(z[i] - mx);
                total += out[i];
            }
        }
        for (auto &v : out) {
            v /= total;
        }
        return out;
    }
    auto r = softmax(right_logits);
    double total = 0;
    for (size_t i = 0; i < n; i++) {
        r[i] = mask[i] ? 0.0 : r[i] * (1.0 - left_probs[i]);
        total += r[i];
    }
    if (!(total > 0)) {
        return uniform_unmasked();
    }
    for (auto &v : r) {
        v /= total;
    }
    return r;
}

LayerProbs layer_probs(const StackParams &params, int layer, double tau) {
    const auto &lp = params.layers.at(layer);
    const auto &sh = lp.shape;
    LayerProbs out;
    out.n_in = sh.n_in;
    out.n_out = sh.n_out;
    out.heads = sh.heads;
    size_t pair_size = static_cast<size_t>(sh.heads) * sh.n_in;
    out.left.assign(pair_size, 0.0);
    out.right.assign(pair_size, 0.0);
    out.right_base.assign(pair_size, 0.0);
    out.right_mask.assign(pair_size, 0);
    double inv = 1.0 / tau;
    RepelMode mode = params.config.effective_repel();
    std::vector<double> z(sh.n_in);
    for (int h = 0; h < sh.heads; h++) {
        auto left = std::span<double>(out.left).subspan(static_cast<size_t>(h) * sh.n_in, sh.n_in);
        auto right = std::span<double>(out.right).subspan(static_cast<size_t>(h) * sh.n_in, sh.n_in);
        auto base = std::span<double>(out.right_base).subspan(static_cast<size_t>(h) * sh.n_in, sh.n_in);
        if (!lp.fixed_pairs.empty()) {
            left[lp.fixed_pairs[h][0]] = 1.0;
            right[lp.fixed_pairs[h][1]] = 1.0;
            base[lp.fixed_pairs[h][1]] = 1.0;
            continue;
        }
        auto pl = params.view(lp.pair_left + static_cast<long>(h) * sh.n_in, sh.n_in);
        auto pr = params.view(lp.pair_right + static_cast<long>(h) * sh.n_in, sh.n_in);
        for (int i = 0; i < sh.n_in; i++) {
            z[i] = (pl[i] + (lp.left_prior.empty() ? 0.0 : lp.left_prior[h * sh.n_in + i])) * inv;
        }
        softmax_into(z, 1.0, left);
        for (int i = 0; i < sh.n_in; i++) {
            z[i] = (pr[i] + (lp.right_prior.empty() ? 0.0 : lp.right_prior[h * sh.n_in + i])) * inv;
        }
        softmax_into(z, 1.0, base);
        auto adjusted = apply_repulsion(left, z, mode, params.config.repel_eta);
        std::copy(adjusted.begin(), adjusted.end(), right.begin());
        if (mode == RepelMode::kHardLog || mode == RepelMode::kHardMul) {
            out.right_mask[static_cast<size_t>(h) * sh.n_in + argmax(left)] = 1;
        }
    }
    out.gates.resize(static_cast<size_t>(sh.heads) * kNumGates);
    for (int h = 0; h < sh.heads; h++) {
        softmax_into(
            params.view(lp.gate + static_cast<long>(h) * kNumGates, kNumGates), inv,
            std::span<double>(out.gates).subspan(static_cast<size_t>(h) * kNumGates, kNumGates));
    }
    out.mix.resize(static_cast<size_t>(sh.n_out) * sh.heads);
    for (int k = 0; k < sh.n_out; k++) {
        softmax_into(
            params.view(lp.mixer + static_cast<long>(k) * sh.heads, sh.heads), inv,
            std::span<double>(out.mix).subspan(static_cast<size_t>(k) * sh.heads, sh.heads));
    }
    return out;
}

std::vector<double> lifting_probs(const StackParams &params, double tau) {
    if (params.lift < 0) {
        return {};
    }
    int rows = params.config.b_eff();
    int cols = 2 * params.config.num_bits;
    std::vector<double> out(static_cast<size_t>(rows) * cols);
    for (int r = 0; r < rows; r++) {
        softmax_into(
            params.view(params.lift + static_cast<long>(r) * cols, cols), 1.0 / tau,
            std::span<double>(out).subspan(static_cast<size_t>(r) * cols, cols));
    }
    return out;
}

SoftForward::SoftForward(const StackParams &params, const StackSchedule &schedule)
    : params_(params), schedule_(schedule) {
    size_t depth = params.layers.size();
    if (schedule.tau.size() != depth || schedule.bandwidth.size() != depth) {
        throw ConfigError("schedule length does not match stack depth");
    }
    for (size_t l = 0; l < depth; l++) {
        if (!(schedule.tau[l] > 0)) {
            throw ConfigError("temperatures must be positive");
        }
        probs_.push_back(layer_probs(params, static_cast<int>(l), schedule.tau[l]));
        auto mode = params.config.interpolant(schedule.bandwidth[l]);
        mode.validate();
        modes_.push_back(mode);
        head_offset_.push_back(head_mix_.size());
        const auto &p = probs_.back();
        for (int h = 0; h < p.heads; h++) {
            std::array<double, kNumCorners> m{};
            for (int g = 0; g < kNumGates; g++) {
                double q = p.gates[static_cast<size_t>(h) * kNumGates + g];
                for (int c = 0; c < kNumCorners; c++) {
                    if (gate_bit(g + 1, c)) {
                        m[c] += q;
                    }
                }
            }
            head_mix_.push_back(m);
        }
    }
    lift_probs_ = lifting_probs(params, schedule.tau[0]);
}

void SoftForward::run_cube() {
    int b = params_.config.num_bits;
    size_t rows = size_t{1} << b;
    std::vector<uint8_t> x(rows * b);
    for (size_t r = 0; r < rows; r++) {
        for (int j = 0; j < b; j++) {
            x[r * b + j] = input_bit(r, b, j);
        }
    }
    run(x, rows);
}

void SoftForward::run(std::span<const uint8_t> inputs, size_t num_rows) {
    int b = params_.config.num_bits;
    if (inputs.size() != num_rows * b) {
        throw ConfigError("input batch has the wrong size for num_bits");
    }
    rows_ = num_rows;
    inputs_.assign(inputs.begin(), inputs.end());
    size_t depth = params_.layers.size();
    int b_eff = params_.config.b_eff();
    wires_.assign(depth + 1, {});
    heads_.assign(depth, {});
    a_.assign(depth, {});
    b_.assign(depth, {});
    phi_.assign(depth, {});
    da_.assign(depth, {});
    db_.assign(depth, {});

    auto &w0 = wires_[0];
    w0.assign(num_rows * b_eff, 0.0);
    for (size_t r = 0; r < num_rows; r++) {
        const uint8_t *x = &inputs_[r * b];
        if (params_.lift < 0) {
            for (int j = 0; j < b; j++) {
                w0[r * b_eff + j] = x[j];
            }
            continue;
        }
        for (int k = 0; k < b_eff; k++) {
            const double *p = &lift_probs_[static_cast<size_t>(k) * 2 * b];
            double v = 0;
            for (int j = 0; j < b; j++) {
                v += x[j] ? p[j] : p[j + b];
            }
            w0[r * b_eff + k] = v;
        }
    }

    for (size_t l = 0; l < depth; l++) {
        const auto &p = probs_[l];
        const auto &u = wires_[l];
        int n_in = p.n_in, heads = p.heads, n_out = p.n_out;
        auto &y = heads_[l];
        auto &av = a_[l];
        auto &bv = b_[l];
        auto &phi = phi_[l];
        auto &dav = da_[l];
        auto &dbv = db_[l];
        y.assign(num_rows * heads, 0.0);
        av.assign(num_rows * heads, 0.0);
        bv.assign(num_rows * heads, 0.0);
        phi.assign(num_rows * heads * kNumCorners, 0.0);
        dav.assign(num_rows * heads * kNumCorners, 0.0);
        dbv.assign(num_rows * heads * kNumCorners, 0.0);
        auto &out = wires_[l + 1];
        out.assign(num_rows * n_out, 0.0);
        const auto &mode = modes_[l];
        for (size_t r = 0; r < num_rows; r++) {
            const double *ur = &u[r * n_in];
            for (int h = 0; h < heads; h++) {
                const double *pl = &p.left[static_cast<size_t>(h) * n_in];
                const double *pr = &p.right[static_cast<size_t>(h) * n_in];
                double a = 0, bb = 0;
                for (int i = 0; i < n_in; i++) {
                    a += pl[i] * ur[i];
                    bb += pr[i] * ur[i];
                }
                auto basis = corner_basis_with_grad(mode, a, bb);
                const auto &m = head_mix_[head_offset_[l] + h];
                double v = 0;
                size_t base = (r * heads + h) * kNumCorners;
                for (int c = 0; c < kNumCorners; c++) {
                    v += basis.phi[c] * m[c];
                    phi[base + c] = basis.phi[c];
                    dav[base + c] = basis.d_a[c];
                    dbv[base + c] = basis.d_b[c];
                }
                av[r * heads + h] = a;
                bv[r * heads + h] = bb;
                y[r * heads + h] = v;
            }
            for (int k = 0; k < n_out; k++) {
                const double *mix = &p.mix[static_cast<size_t>(k) * heads];
                double v = 0;
                for (int h = 0; h < heads; h++) {
                    v += mix[h] * y[r * heads + h];
                }
                out[r * n_out + k] = v;
            }
        }
    }
    const auto &last = wires_[depth];
    pred_.assign(last.begin(), last.end());
}

ForwardDiagnostics SoftForward::diagnostics() const {
    ForwardDiagnostics d;
    for (size_t l = 0; l < probs_.size(); l++) {
        d.routing.push_back(probs_[l].mix);
        d.gates.push_back(probs_[l].gates);
    }
    d.tau = schedule_.tau;
    d.bandwidth = schedule_.bandwidth;
    return d;
}

std::vector<double> SoftForward::backward(std::span<const double> d_pred, const DiagnosticGrads *extra) const {
    if (d_pred.size() != rows_) {
        throw std::invalid_argument("d_pred length must equal the batch size");
    }
    std::vector<double> grad(params_.values.size(), 0.0);
    size_t depth = params_.layers.size();
    std::vector<double> d_out(d_pred.begin(), d_pred.end());
    RepelMode mode = params_.config.effective_repel();
    double repel_eta = params_.config.repel_eta;

    for (size_t li = depth; li-- > 0;) {
        const auto &lp = params_.layers[li];
        const auto &p = probs_[li];
        int n_in = p.n_in, heads = p.heads, n_out = p.n_out;
        double inv = 1.0 / schedule_.tau[li];
        const auto &u = wires_[li];
        const auto &y = heads_[li];
        const auto &phi = phi_[li];
        const auto &dav = da_[li];
        const auto &dbv = db_[li];

        std::vector<double> d_mix(static_cast<size_t>(n_out) * heads, 0.0);
        std::vector<double> dm(static_cast<size_t>(heads) * kNumCorners, 0.0);
        std::vector<double> d_left(static_cast<size_t>(heads) * n_in, 0.0);
        std::vector<double> d_right(static_cast<size_t>(heads) * n_in, 0.0);
        std::vector<double> d_u(rows_ * n_in, 0.0);
        std::vector<double> dy(heads);

        for (size_t r = 0; r < rows_; r++) {
            std::fill(dy.begin(), dy.end(), 0.0);
            for (int k = 0; k < n_out; k++) {
                double g = d_out[r * n_out + k];
                if (g == 0) {
                    continue;
                }
                const double *mix = &p.mix[static_cast<size_t>(k) * heads];
                double *dmix = &d_mix[static_cast<size_t>(k) * heads];
                for (int h = 0; h < heads; h++) {
                    dy[h] += mix[h] * g;
                    dmix[h] += g * y[r * heads + h];
                }
            }
            const double *ur = &u[r * n_in];
            double *dur = &d_u[r * n_in];
            for (int h = 0; h < heads; h++) {
                double g = dy[h];
                if (g == 0) {
                    continue;
                }
                const auto &m = head_mix_[head_offset_[li] + h];
                size_t base = (r * heads + h) * kNumCorners;
                double ga = 0, gb = 0;
                for (int c = 0; c < kNumCorners; c++) {
                    dm[h * kNumCorners + c] += g * phi[base + c];
                    ga += m[c] * dav[base + c];
                    gb += m[c] * dbv[base + c];
                }
                ga *= g;
                gb *= g;
                const double *pl = &p.left[static_cast<size_t>(h) * n_in];
                const double *pr = &p.right[static_cast<size_t>(h) * n_in];
                double *dl = &d_left[static_cast<size_t>(h) * n_in];
                double *dr = &d_right[static_cast<size_t>(h) * n_in];
                for (int i = 0; i < n_in; i++) {
                    dl[i] += ga * ur[i];
                    dr[i] += gb * ur[i];
                    dur[i] += ga * pl[i] + gb * pr[i];
                }
            }
        }

        // Gate logits.
        std::vector<double> dq(kNumGates);
        for (int h = 0; h < heads; h++) {
            for (int g = 0; g < kNumGates; g++) {
                double v = 0;
                for (int c = 0; c < kNumCorners; c++) {
                    if (gate_bit(g + 1, c)) {
                        v += dm[h * kNumCorners + c];
                    }
                }
                if (extra != nullptr && li < extra->gates.size() && !extra->gates[li].empty()) {
                    v += extra->gates[li][static_cast<size_t>(h) * kNumGates + g];
                }
                dq[g] = v;
            }
            auto q = std::span<const double>(p.gates).subspan(static_cast<size_t>(h) * kNumGates, kNumGates);
            auto dz = softmax_backward(q, dq);
            for (int g = 0; g < kNumGates; g++) {
                grad[lp.gate + static_cast<long>(h) * kNumGates + g] += dz[g] * inv;
            }
        }

        // Mixer logits.
        if (extra != nullptr && li < extra->routing.size() && !extra->routing[li].empty()) {
            for (size_t i = 0; i < d_mix.size(); i++) {
                d_mix[i] += extra->routing[li][i];
            }
        }
        for (int k = 0; k < n_out; k++) {
            auto row = std::span<const double>(p.mix).subspan(static_cast<size_t>(k) * heads, heads);
            auto drow = std::span<const double>(d_mix).subspan(static_cast<size_t>(k) * heads, heads);
            auto dz = softmax_backward(row, drow);
            for (int h = 0; h < heads; h++) {
                grad[lp.mixer + static_cast<long>(k) * heads + h] += dz[h] * inv;
            }
        }

        // Pair logits.
        if (lp.fixed_pairs.empty()) {
            for (int h = 0; h < heads; h++) {
                size_t off = static_cast<size_t>(h) * n_in;
                auto left = std::span<const double>(p.left).subspan(off, n_in);
                auto right = std::span<const double>(p.right).subspan(off, n_in);
                auto base = std::span<const double>(p.right_base).subspan(off, n_in);
                auto mask = std::span<const uint8_t>(p.right_mask).subspan(off, n_in);
                auto dr = std::span<double>(d_right).subspan(off, n_in);
                auto dl = std::span<double>(d_left).subspan(off, n_in);
                std::vector<double> dz_right;
                if (mode == RepelMode::kNone) {
                    dz_right = softmax_backward(right, dr);
                } else if (mode == RepelMode::kLog || mode == RepelMode::kHardLog) {
                    dz_right = softmax_backward(right, dr);
                    for (int i = 0; i < n_in; i++) {
                        if (mask[i]) {
                            dz_right[i] = 0;
                            continue;
                        }
                        double gap = 1.0 - left[i];
                        if (gap > kRepelFloor) {
                            dl[i] += dz_right[i] * repel_eta * (-1.0 / gap);
                        }
                    }
                } else {
                    double total = 0;
                    for (int i = 0; i < n_in; i++) {
                        if (!mask[i]) {
                            total += base[i] * (1.0 - left[i]);
                        }
                    }
                    dz_right.assign(n_in, 0.0);
                    if (total > 0) {
                        double dot = 0;
                        for (int i = 0; i < n_in; i++) {
                            dot += right[i] * dr[i];
                        }
                        std::vector<double> d_base(n_in, 0.0);
                        for (int i = 0; i < n_in; i++) {
                            if (mask[i]) {
                                continue;
                            }
                            double dw = (dr[i] - dot) / total;
                            d_base[i] = dw * (1.0 - left[i]);
                            dl[i] += -dw * base[i];
                        }
                        dz_right = softmax_backward(base, d_base);
                    }
                }
                for (int i = 0; i < n_in; i++) {
                    grad[lp.pair_right + static_cast<long>(off) + i] += dz_right[i] * inv;
                }
                auto dz_left = softmax_backward(left, dl);
                for (int i = 0; i < n_in; i++) {
                    grad[lp.pair_left + static_cast<long>(off) + i] += dz_left[i] * inv;
                }
            }
        }
        d_out = std::move(d_u);
    }

    if (params_.lift >= 0) {
        int b = params_.config.num_bits;
        int b_eff = params_.config.b_eff();
        double inv = 1.0 / schedule_.tau[0];
        std::vector<double> dp(2 * b);
        for (int k = 0; k < b_eff; k++) {
            std::fill(dp.begin(), dp.end(), 0.0);
            for (size_t r = 0; r < rows_; r++) {
                double g = d_out[r * b_eff + k];
                const uint8_t *x = &inputs_[r * b];
                for (int j = 0; j < b; j++) {
                    if (x[j]) {
                        dp[j] += g;
                    } else {
                        dp[j + b] += g;
                    }
                }
            }
            auto row = std::span<const double>(lift_probs_).subspan(static_cast<size_t>(k) * 2 * b, 2 * b);
            auto dz = softmax_backward(row, dp);
            for (int j = 0; j < 2 * b; j++) {
                grad[params_.lift + static_cast<long>(k) * 2 * b + j] += dz[j] * inv;
            }
        }
    }
    return grad;
}

std::vector<double> forward_soft(const StackParams &params, const StackSchedule &schedule) {
    SoftForward f(params, schedule);
    f.run_cube();
    return f.predictions();
}

std::vector<double> forward_soft(
    const StackParams &params, const StackSchedule &schedule, std::span<const uint8_t> inputs, size_t num_rows,
    ForwardDiagnostics *diag) {
    for (uint8_t v : inputs) {
        if (v > 1) {
            throw ConfigError("forward inputs must be Boolean");
        }
    }
    SoftForward f(params, schedule);
    f.run(inputs, num_rows);
    if (diag != nullptr) {
        *diag = f.diagnostics();
    }
    return f.predictions();
}

DecodedStack decode_argmax(const StackParams &params, const StackSchedule &schedule) {
    const auto &cfg = params.config;
    DecodedStack out;
    auto &c = out.circuit;
    c.num_input_bits = cfg.num_bits;
    int b_eff = cfg.b_eff();
    if (params.lift >= 0) {
        auto lp = lifting_probs(params, schedule.tau.at(0));
        int cols = 2 * cfg.num_bits;
        for (int k = 0; k < b_eff; k++) {
            c.lift_select.push_back(
                static_cast<int>(argmax(std::span<const double>(lp).subspan(static_cast<size_t>(k) * cols, cols))) +
                1);
        }
    } else {
        for (int j = 1; j <= cfg.num_bits; j++) {
            c.lift_select.push_back(j);
        }
    }
    int width = b_eff;
    for (size_t l = 0; l < params.layers.size(); l++) {
        auto p = layer_probs(params, static_cast<int>(l), schedule.tau.at(l));
        std::vector<int> head_gate(p.heads);
        for (int h = 0; h < p.heads; h++) {
            head_gate[h] = static_cast<int>(argmax(std::span<const double>(p.gates).subspan(
                               static_cast<size_t>(h) * kNumGates, kNumGates))) +
                           1;
        }
        std::vector<CircuitNode> nodes;
        std::vector<int> chosen;
        for (int k = 0; k < p.n_out; k++) {
            int h = static_cast<int>(
                argmax(std::span<const double>(p.mix).subspan(static_cast<size_t>(k) * p.heads, p.heads)));
            size_t off = static_cast<size_t>(h) * p.n_in;
            int left = static_cast<int>(argmax(std::span<const double>(p.left).subspan(off, p.n_in)));
            int right = static_cast<int>(argmax(std::span<const double>(p.right).subspan(off, p.n_in)));
            nodes.push_back({head_gate[h], left, right});
            chosen.push_back(h);
        }
        width = std::max(width, p.n_out);
        c.layers.push_back(std::move(nodes));
        out.head_gates.push_back(std::move(head_gate));
        out.wire_heads.push_back(std::move(chosen));
    }
    c.width = width;
    out.expression = circuit_expression(c);
    return out;
}

namespace {

bool gate_reads_left(int gate) {
    return gate != kGateFalse && gate != kGateTrue && gate != kGateProjB && gate != kGateNotB;
}

}  // namespace

std::vector<int> readout_path_gates(const LayeredCircuit &c) {
    std::vector<int> gates;
    int idx = 0;
    for (size_t l = c.layers.size(); l-- > 0;) {
        const auto &node = c.layers[l].at(idx);
        gates.push_back(node.gate);
        idx = gate_reads_left(node.gate) ? node.left : node.right;
    }
    return gates;
}

LayeredCircuit sample_circuit(const StackParams &params, const StackSchedule &schedule, Rng &rng) {
    const auto &cfg = params.config;
    LayeredCircuit c;
    c.num_input_bits = cfg.num_bits;
    int b_eff = cfg.b_eff();
    if (params.lift >= 0) {
        auto lp = lifting_probs(params, schedule.tau.at(0));
        int cols = 2 * cfg.num_bits;
        for (int k = 0; k < b_eff; k++) {
            c.lift_select.push_back(
                sample_categorical(std::span<const double>(lp).subspan(static_cast<size_t>(k) * cols, cols), rng) +
                1);
        }
    } else {
        for (int j = 1; j <= cfg.num_bits; j++) {
            c.lift_select.push_back(j);
        }
    }
    int width = b_eff;
    for (size_t l = 0; l < params.layers.size(); l++) {
        auto p = layer_probs(params, static_cast<int>(l), schedule.tau.at(l));
        std::vector<CircuitNode> nodes;
        for (int k = 0; k < p.n_out; k++) {
            int h = sample_categorical(
                std::span<const double>(p.mix).subspan(static_cast<size_t>(k) * p.heads, p.heads), rng);
            int g = sample_categorical(
                        std::span<const double>(p.gates).subspan(static_cast<size_t>(h) * kNumGates, kNumGates),
                        rng) +
                    1;
            size_t off = static_cast<size_t>(h) * p.n_in;
            int left = sample_categorical(std::span<const double>(p.left).subspan(off, p.n_in), rng);
            int right = sample_categorical(std::span<const double>(p.right).subspan(off, p.n_in), rng);
            nodes.push_back({g, left, right});
        }
        width = std::max(width, p.n_out);
        c.layers.push_back(std::move(nodes));
    }
    c.width = width;
    return c;
}

namespace {

double entropy_bits(double p) {
    if (p <= 0 || p >= 1) {
        return 0.0;
    }
    return -(p * std::log2(p) + (1 - p) * std::log2(1 - p));
}

}  // namespace

double pair_mutual_information(const TruthTable &t, int i, int j) {
    int b = t.num_bits();
    if (i < 0 || j < 0 || i >= b || j >= b || i == j) {
        throw std::invalid_argument("pair indices must be distinct bits");
    }
    std::array<size_t, 4> ones{}, counts{};
    for (size_t r = 0; r < t.size(); r++) {
        int cell = input_bit(r, b, i) * 2 + input_bit(r, b, j);
        counts[cell]++;
        ones[cell] += t[r];
    }
    double h = entropy_bits(static_cast<double>(t.count_ones()) / t.size());
    double cond = 0;
    for (int cell = 0; cell < 4; cell++) {
        cond += 0.25 * entropy_bits(static_cast<double>(ones[cell]) / counts[cell]);
    }
    return std::max(0.0, h - cond);
}

std::vector<std::array<int, 2>> ranked_mi_pairs(const TruthTable &t) {
    int b = t.num_bits();
    struct Entry {
        double mi;
        int i, j;
    };
    std::vector<Entry> entries;
    for (int i = 0; i < b; i++) {
        for (int j = i + 1; j < b; j++) {
            // Rounded so that symmetric pairs tie exactly.
            double mi = std::round(pair_mutual_information(t, i, j) * 1e12) / 1e12;
            entries.push_back({mi, i, j});
            entries.push_back({mi, j, i});
        }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry &x, const Entry &y) {
        if (x.mi != y.mi) {
            return x.mi > y.mi;
        }
        return std::tie(x.i, x.j) < std::tie(y.i, y.j);
    });
    std::vector<std::array<int, 2>> out;
    for (const auto &e : entries) {
        out.push_back({e.i, e.j});
    }
    return out;
}

std::pair<std::vector<double>, std::vector<double>> mi_pair_priors(const TruthTable &t, int heads, int width) {
    if (width < 2 || heads < 1) {
        throw std::invalid_argument("priors need width >= 2 and heads >= 1");
    }
    std::vector<double> left(static_cast<size_t>(heads) * width, 1.0 / width);
    std::vector<double> right = left;
    if (t.is_constant() || t.num_bits() < 2) {
        return {left, right};
    }
    auto ranked = ranked_mi_pairs(t);
    double off = kPriorSmoothing / (width - 1);
    for (int h = 0; h < heads; h++) {
        const auto &pr = ranked[h % ranked.size()];
        for (int w = 0; w < width; w++) {
            left[static_cast<size_t>(h) * width + w] = w == pr[0] ? 1 - kPriorSmoothing : off;
            right[static_cast<size_t>(h) * width + w] = w == pr[1] ? 1 - kPriorSmoothing : off;
        }
    }
    return {left, right};
}

nlohmann::json params_to_json(const StackParams &params, const StackSchedule &schedule) {
    nlohmann::json tensors = nlohmann::json::object();
    for (const auto &t : params.tensors()) {
        auto v = params.view(t.offset, static_cast<size_t>(t.rows) * t.cols);
        tensors[t.name] = {{"shape", {t.rows, t.cols}}, {"data", std::vector<double>(v.begin(), v.end())}};
    }
    nlohmann::json fixed = nlohmann::json::object();
    for (size_t l = 0; l < params.layers.size(); l++) {
        const auto &lp = params.layers[l];
        std::string p = "layer" + std::to_string(l) + ".";
        if (!lp.left_prior.empty()) {
            fixed[p + "left_prior"] = lp.left_prior;
            fixed[p + "right_prior"] = lp.right_prior;
        }
        if (!lp.fixed_pairs.empty()) {
            fixed[p + "fixed_pairs"] = lp.fixed_pairs;
        }
    }
    auto decoded = decode_argmax(params, schedule);
    return {
        {"config", params.config.to_json()},
        {"tensors", tensors},
        {"fixed", fixed},
        {"schedule", {{"tau", schedule.tau}, {"bandwidth", schedule.bandwidth}}},
        {"decoded", {{"circuit", circuit_to_json(decoded.circuit)}, {"expression", render(decoded.expression)}}},
    };
}

StackParams params_from_json(const nlohmann::json &j, StackSchedule *schedule) {
    auto config = StackConfig::from_json(j.at("config"));
    StackParams p = allocate_params(config);
    const auto &tensors = j.at("tensors");
    for (const auto &t : p.tensors()) {
        if (!tensors.contains(t.name)) {
            throw ConfigError("checkpoint is missing tensor " + t.name);
        }
        auto data = tensors.at(t.name).at("data").get<std::vector<double>>();
        if (data.size() != static_cast<size_t>(t.rows) * t.cols) {
            throw ConfigError("checkpoint tensor " + t.name + " has the wrong size");
        }
        std::copy(data.begin(), data.end(), p.values.begin() + t.offset);
    }
    if (j.contains("fixed")) {
        const auto &fixed = j.at("fixed");
        for (size_t l = 0; l < p.layers.size(); l++) {
            auto &lp = p.layers[l];
            std::string pre = "layer" + std::to_string(l) + ".";
            size_t n = static_cast<size_t>(lp.shape.heads) * lp.shape.n_in;
            if (fixed.contains(pre + "left_prior")) {
                lp.left_prior = fixed.at(pre + "left_prior").get<std::vector<double>>();
                lp.right_prior = fixed.at(pre + "right_prior").get<std::vector<double>>();
                if (lp.left_prior.size() != n || lp.right_prior.size() != n) {
                    throw ConfigError("checkpoint prior has the wrong size");
                }
            }
            if (fixed.contains(pre + "fixed_pairs")) {
                lp.fixed_pairs = fixed.at(pre + "fixed_pairs").get<std::vector<std::array<int, 2>>>();
                if (lp.fixed_pairs.size() != static_cast<size_t>(lp.shape.heads)) {
                    throw ConfigError("checkpoint fixed pairs have the wrong size");
                }
            }
        }
    }
    if (p.layers[0].pair_left < 0 && p.layers[0].fixed_pairs.empty()) {
        throw ConfigError("mi_hard checkpoint is missing fixed pairs");
    }
    if (schedule != nullptr) {
        if (j.contains("schedule")) {
            schedule->tau = j.at("schedule").at("tau").get<std::vector<double>>();
            schedule->bandwidth = j.at("schedule").at("bandwidth").get<std::vector<double>>();
        } else {
            *schedule = StackSchedule::for_config(config, 1.0);
        }
    }
    return p;
}

}  // namespace sbc
