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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sbc/cli.h"
#include "sbc/compile.h"
#include "sbc/diag.h"
#include "sbc/expression.h"
#include "sbc/interp.h"
#include "sbc/mlp.h"
#include "sbc/taskgen.h"
#include "sbc/train.h"

namespace py = pybind11;
using nlohmann::json;

namespace {

sbc::TruthTable table_from(const std::vector<int> &outputs) {
    size_t n = outputs.size();
    int b = 0;
    while ((size_t{1} << b) < n) {
        b++;
    }
    if ((size_t{1} << b) != n || b < 1) {
        throw std::invalid_argument("truth table length must be a power of two >= 2");
    }
    std::vector<uint8_t> bits;
    for (int v : outputs) {
        bits.push_back(static_cast<uint8_t>(v != 0));
    }
    return sbc::TruthTable(b, bits);
}

std::vector<int> table_to(const sbc::TruthTable &t) {
    return {t.outputs().begin(), t.outputs().end()};
}

std::string train_sbc(const std::vector<int> &outputs, const std::string &stack_json, const std::string &train_json) {
    auto t = table_from(outputs);
    auto sj = json::parse(stack_json);
    sj["num_bits"] = t.num_bits();
    auto stack = sbc::StackConfig::from_json(sj);
    auto cfg = sbc::TrainConfig::from_json(json::parse(train_json), sbc::TrainConfig{});
    auto r = sbc::train_instance(t, stack, cfg);
    auto d = sbc::diagnose_sbc(r.params, r.schedule, t);
    auto decoded = sbc::decode_argmax(r.params, r.schedule);
    return json{{"em", r.em},
                {"decoded_em", r.decoded_em},
                {"row_acc", r.row_acc},
                {"steps", r.steps},
                {"stop_reason", r.stop_reason},
                {"expression", sbc::render(decoded.expression)},
                {"metrics", d.to_json()},
                {"circuit", sbc::circuit_to_json(decoded.circuit)}}
        .dump();
}

std::string train_mlp(const std::vector<int> &outputs, int width, int depth, const std::string &train_json) {
    auto t = table_from(outputs);
    sbc::TrainConfig cfg;
    cfg.learning_rate = 0.01;
    cfg = sbc::TrainConfig::from_json(json::parse(train_json), cfg);
    auto r = sbc::mlp_train(t, sbc::MlpConfig{t.num_bits(), width, depth, sbc::MatchRegime::kNeuron}, cfg);
    auto d = sbc::diagnose_mlp(r.params, t);
    return json{{"em", r.em}, {"row_acc", r.row_acc}, {"steps", r.steps}, {"params", r.params.values.size()},
                {"metrics", d.to_json()}}
        .dump();
}

std::string compile_table(const std::vector<int> &outputs, double delta, int samples, uint64_t seed) {
    auto t = table_from(outputs);
    auto compiled = sbc::compile_params(sbc::compile_tree(t), delta);
    auto decoded = sbc::decode_argmax(compiled.params, compiled.schedule);
    sbc::Rng rng(seed);
    int ok = 0;
    for (int s = 0; s < samples; s++) {
        ok += sbc::circuit_table(sbc::sample_circuit(compiled.params, compiled.schedule, rng)) == t;
    }
    return json{{"report", compiled.report.to_json()},
                {"decode_em", sbc::exact_match(sbc::circuit_table(decoded.circuit), t)},
                {"success_rate", samples > 0 ? static_cast<double>(ok) / samples : 0.0},
                {"expression", sbc::render(decoded.expression)},
                {"circuit", sbc::circuit_to_json(decoded.circuit)}}
        .dump();
}

std::string generate(const std::string &gen_json) {
    auto data = sbc::generate_dataset(sbc::GenConfig::from_json(json::parse(gen_json)));
    json out = json::array();
    for (const auto &d : data) {
        out.push_back(sbc::instance_to_json(d));
    }
    return out.dump();
}

py::tuple cli(const std::vector<std::string> &args) {
    std::vector<std::string> full{"sbc"};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char *> argv;
    for (const auto &a : full) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    int code;
    {
        py::gil_scoped_release release;
        code = sbc::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_sbc, m) {
    m.doc() = "Stochastic Boolean circuits: native core";
    py::register_exception<sbc::ExprParseError>(m, "ExprParseError", PyExc_ValueError);

    m.def("gate_name", [](int id) { return std::string(sbc::gate_name(id)); });
    m.def("gate_eval", [](int id, int a, int b) { return static_cast<int>(sbc::Gate(id)(a & 1, b & 1)); });
    m.def("sigma16", [](const std::string &mode, double a, double b, double bandwidth, double radius) {
        sbc::InterpolantMode im{sbc::interpolant_from_name(mode), bandwidth, radius};
        im.validate();
        auto v = sbc::sigma16(im, a, b);
        return std::vector<double>(v.begin(), v.end());
    });
    m.def("parse_render", [](const std::string &text) { return sbc::render(sbc::parse_expression(text)); });
    m.def("expr_tokens", [](const std::string &text) { return sbc::expr_tokens(sbc::parse_expression(text)); });
    m.def("formula_table", [](const std::string &text, int bits) {
        return table_to(sbc::expression_table(sbc::parse_expression(text), bits));
    });
    m.def("table_hex", [](const std::vector<int> &outputs) { return table_from(outputs).to_hex(); });
    m.def("bnr_exact", [](const std::vector<double> &u, int d) { return sbc::bnr_exact(u, d); });
    m.def("bnr_eps", [](const std::vector<double> &u, double eps) { return sbc::bnr_eps(u, eps); });
    m.def("binarize", [](const std::vector<double> &u) {
        auto b = sbc::binarize(u);
        return std::vector<int>(b.begin(), b.end());
    });
    m.def("relu_bnr_failure_trial", [](int bits, int trials, uint64_t seed) {
        sbc::Rng rng(seed);
        return sbc::relu_bnr_failure_trial(bits, trials, rng);
    });
    m.def("generate_json", &generate);
    m.def("compile_json", &compile_table);
    m.def("train_sbc_json", &train_sbc);
    m.def("train_mlp_json", &train_mlp);
    m.def("cli", &cli);
}
