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

#include "sbc/cli.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "sbc/compile.h"
#include "sbc/expression.h"

namespace sbc {

std::string ModelSpec::name() const {
    return mlp ? "mlp:" + std::string(regime_name(regime)) : "sbc";
}

ModelSpec ModelSpec::parse(const std::string &name) {
    if (name == "sbc") {
        return {};
    }
    if (name == "mlp") {
        return {true, MatchRegime::kNeuron};
    }
    if (name.rfind("mlp:", 0) == 0) {
        return {true, regime_from_name(name.substr(4))};
    }
    throw std::invalid_argument("unknown model '" + name + "'");
}

ExperimentConfig::ExperimentConfig() {
    mlp_train.learning_rate = 0.01;
}

nlohmann::json ExperimentConfig::to_json() const {
    return {
        {"stack", stack.to_json()},
        {"train", train.to_json()},
        {"mlp_train", mlp_train.to_json()},
        {"s_rule", s_rule.to_json()},
        {"l_rule", l_rule.to_json()},
    };
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json &j, const ExperimentConfig &base) {
    ExperimentConfig c = base;
    if (j.contains("stack")) {
        auto merged = c.stack.to_json();
        merged.merge_patch(j.at("stack"));
        c.stack = StackConfig::from_json(merged);
    }
    if (j.contains("train")) {
        c.train = TrainConfig::from_json(j.at("train"), c.train);
    }
    if (j.contains("mlp_train")) {
        c.mlp_train = TrainConfig::from_json(j.at("mlp_train"), c.mlp_train);
    }
    if (j.contains("s_rule")) {
        c.s_rule = ScaleRule::from_json(j.at("s_rule"));
    }
    if (j.contains("l_rule")) {
        c.l_rule = ScaleRule::from_json(j.at("l_rule"));
    }
    return c;
}

nlohmann::json RunRecord::to_json() const {
    auto j = comparison_json();
    j["wall_time_s"] = wall_time_s;
    return j;
}

nlohmann::json RunRecord::comparison_json() const {
    return {
        {"run_id", run_id},
        {"seed", seed},
        {"instance_id", instance_id},
        {"model", model},
        {"config", config},
        {"metrics", metrics.to_json()},
        {"decoded_expression", decoded_expression},
        {"label_tokens", label_tokens},
        {"B", num_bits},
        {"S_model", s_model},
        {"L_model", l_model},
        {"model_params", model_params},
        {"decoded_em", decoded_em},
        {"row_acc", row_acc},
        {"steps", steps},
        {"best_step", best_step},
        {"stop_reason", stop_reason},
        {"nan_abort", nan_abort},
        {"artifacts", artifacts},
    };
}

RunRecord RunRecord::from_json(const nlohmann::json &j) {
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.seed = j.at("seed").get<uint64_t>();
    r.instance_id = j.at("instance_id").get<int>();
    r.model = j.at("model").get<std::string>();
    r.config = j.at("config");
    r.metrics = DiagReport::from_json(j.at("metrics"));
    r.decoded_expression = j.at("decoded_expression").get<std::string>();
    r.label_tokens = j.at("label_tokens").get<int>();
    r.num_bits = j.at("B").get<int>();
    r.s_model = j.at("S_model").get<int>();
    r.l_model = j.at("L_model").get<int>();
    r.model_params = j.at("model_params").get<size_t>();
    r.decoded_em = j.at("decoded_em").get<double>();
    r.row_acc = j.at("row_acc").get<double>();
    r.steps = j.at("steps").get<int>();
    r.best_step = j.at("best_step").get<int>();
    r.stop_reason = j.at("stop_reason").get<std::string>();
    r.nan_abort = j.at("nan_abort").get<bool>();
    r.wall_time_s = j.value("wall_time_s", 0.0);
    r.artifacts = j.value("artifacts", nlohmann::json::object());
    return r;
}

namespace {

uint64_t fnv1a(const std::string &s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h = (h ^ c) * 1099511628211ull;
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

StackConfig instance_stack(const TaskInstance &inst, const ExperimentConfig &config) {
    auto [s, l] = scale_shape(inst.s_base, inst.l_base, config.s_rule, config.l_rule);
    StackConfig stack = config.stack;
    stack.num_bits = inst.num_bits;
    stack.heads = s;
    stack.depth = l;
    if (stack.use_lifting && stack.lift_width == 0) {
        stack.lift_width = 2 * inst.num_bits;
    }
    return stack;
}

}  // namespace

std::string make_run_id(const ModelSpec &model, int instance_id, uint64_t seed, const nlohmann::json &config) {
    return model.name() + "-i" + std::to_string(instance_id) + "-s" + std::to_string(seed) + "-" +
           hex64(fnv1a(config.dump())).substr(0, 12);
}

uint64_t cell_seed(int instance_id, uint64_t seed) {
    return mix64(mix64(seed) + static_cast<uint64_t>(instance_id));
}

nlohmann::json cell_config(const TaskInstance &inst, const ModelSpec &model, const ExperimentConfig &config) {
    StackConfig stack = instance_stack(inst, config);
    nlohmann::json j;
    if (model.mlp) {
        size_t trainable = allocate_params(stack).trainable_count();
        auto match = match_width(model.regime, stack, trainable, primitive_count(stack));
        j["mlp"] = match.config.to_json();
        j["matched_stack"] = stack.to_json();
        j["train"] = config.mlp_train.to_json();
    } else {
        j["stack"] = stack.to_json();
        j["train"] = config.train.to_json();
    }
    j["s_rule"] = config.s_rule.to_json();
    j["l_rule"] = config.l_rule.to_json();
    return j;
}

RunRecord run_cell(const TaskInstance &inst, const ModelSpec &model, uint64_t seed, const ExperimentConfig &config) {
    auto start = std::chrono::steady_clock::now();
    RunRecord r;
    r.config = cell_config(inst, model, config);
    r.run_id = make_run_id(model, inst.id, seed, r.config);
    r.seed = seed;
    r.instance_id = inst.id;
    r.model = model.name();
    r.label_tokens = expr_tokens(inst.formula);
    r.num_bits = inst.num_bits;
    r.artifacts["outputs"] = inst.table.to_hex();
    StackConfig stack = instance_stack(inst, config);
    r.s_model = stack.heads;
    r.l_model = stack.depth;
    if (model.mlp) {
        MlpConfig mc = MlpConfig::from_json(r.config.at("mlp"));
        TrainConfig tc = config.mlp_train;
        tc.seed = cell_seed(inst.id, seed);
        auto res = mlp_train(inst.table, mc, tc);
        r.metrics = diagnose_mlp(res.params, inst.table);
        r.model_params = res.params.values.size();
        r.decoded_em = res.em;
        r.row_acc = res.row_acc;
        r.steps = res.steps;
        r.best_step = res.best_step;
        r.stop_reason = res.stop_reason;
        r.nan_abort = res.nan_abort;
        r.artifacts["mlp_params"] = mlp_params_to_json(res.params);
    } else {
        TrainConfig tc = config.train;
        tc.seed = cell_seed(inst.id, seed);
        auto res = train_instance(inst.table, stack, tc);
        r.metrics = diagnose_sbc(res.params, res.schedule, inst.table);
        auto decoded = decode_argmax(res.params, res.schedule);
        r.decoded_expression = render(decoded.expression);
        r.model_params = res.params.trainable_count();
        r.decoded_em = res.decoded_em;
        r.row_acc = res.row_acc;
        r.steps = res.steps;
        r.best_step = res.best_step;
        r.stop_reason = res.stop_reason;
        r.nan_abort = res.nan_abort;
        r.artifacts["circuit"] = circuit_to_json(decoded.circuit);
    }
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::vector<RunRecord> read_records(const std::string &path) {
    std::vector<RunRecord> out;
    std::ifstream in(path);
    if (!in) {
        return out;
    }
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (line.empty()) {
            continue;
        }
        try {
            out.push_back(RunRecord::from_json(nlohmann::json::parse(line)));
        } catch (const std::exception &e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void append_records(const std::string &path, const std::vector<RunRecord> &records) {
    if (records.empty()) {
        return;
    }
    std::string text;
    for (const auto &r : records) {
        text += r.to_json().dump() + "\n";
    }
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) {
        throw std::runtime_error("cannot open '" + path + "' for appending");
    }
    ::flock(fd, LOCK_EX);
    size_t done = 0;
    while (done < text.size()) {
        ssize_t n = ::write(fd, text.data() + done, text.size() - done);
        if (n <= 0) {
            ::flock(fd, LOCK_UN);
            ::close(fd);
            throw std::runtime_error("write to '" + path + "' failed");
        }
        done += static_cast<size_t>(n);
    }
    ::flock(fd, LOCK_UN);
    ::close(fd);
}

int worker_count() {
    if (const char *env = std::getenv("SBC_WORKERS")) {
        int n = std::atoi(env);
        if (n > 0) {
            return n;
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

GridResult run_grid(
    const std::vector<TaskInstance> &instances, const std::vector<ModelSpec> &models,
    const std::vector<uint64_t> &seeds, const ExperimentConfig &config, const std::string &out_path, int workers) {
    struct Cell {
        const TaskInstance *inst;
        ModelSpec model;
        uint64_t seed;
        std::string run_id;
    };
    std::vector<Cell> cells;
    for (const auto &inst : instances) {
        for (uint64_t seed : seeds) {
            for (const auto &m : models) {
                cells.push_back({&inst, m, seed, make_run_id(m, inst.id, seed, cell_config(inst, m, config))});
            }
        }
    }
    std::map<std::string, RunRecord> existing;
    if (!out_path.empty()) {
        for (auto &r : read_records(out_path)) {
            existing.emplace(r.run_id, std::move(r));
        }
    }

    std::vector<std::optional<RunRecord>> results(cells.size());
    std::vector<uint8_t> finished(cells.size(), 0);
    std::vector<size_t> todo;
    for (size_t i = 0; i < cells.size(); i++) {
        auto it = existing.find(cells[i].run_id);
        if (it != existing.end()) {
            results[i] = it->second;
            finished[i] = 1;
        } else {
            todo.push_back(i);
        }
    }

    GridResult out;
    std::mutex mu;
    size_t flushed = 0;
    // Writes the longest finished prefix so the file order matches cell order.
    auto flush = [&]() {
        std::vector<RunRecord> batch;
        while (flushed < cells.size() && finished[flushed]) {
            if (results[flushed] && existing.find(cells[flushed].run_id) == existing.end()) {
                batch.push_back(*results[flushed]);
            }
            flushed++;
        }
        if (!out_path.empty()) {
            append_records(out_path, batch);
        }
    };
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        while (true) {
            size_t k = next.fetch_add(1);
            if (k >= todo.size()) {
                return;
            }
            size_t i = todo[k];
            std::optional<RunRecord> rec;
            std::string error;
            try {
                rec = run_cell(*cells[i].inst, cells[i].model, cells[i].seed, config);
            } catch (const std::exception &e) {
                error = cells[i].run_id + ": " + e.what();
            }
            std::lock_guard<std::mutex> lock(mu);
            results[i] = std::move(rec);
            finished[i] = 1;
            if (!error.empty()) {
                out.failed++;
                out.errors.push_back(error);
            }
            flush();
        }
    };
    int n = std::max(1, std::min<int>(workers, static_cast<int>(todo.size())));
    std::vector<std::thread> threads;
    for (int t = 0; t < n; t++) {
        threads.emplace_back(worker);
    }
    for (auto &t : threads) {
        t.join();
    }
    {
        std::lock_guard<std::mutex> lock(mu);
        flush();
    }
    for (auto &r : results) {
        if (r) {
            out.records.push_back(std::move(*r));
        }
    }
    return out;
}

namespace {

MeanStd mean_std(const std::vector<double> &v) {
    MeanStd m;
    if (v.empty()) {
        return m;
    }
    for (double x : v) {
        m.mean += x;
    }
    m.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0;
        for (double x : v) {
            ss += (x - m.mean) * (x - m.mean);
        }
        m.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return m;
}

std::string fmt(double v, int prec = 3) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << v;
    return s.str();
}

std::string fmt(const MeanStd &m) {
    return fmt(m.mean) + " +- " + fmt(m.std);
}

}  // namespace

std::vector<Summary> summarize(const std::vector<RunRecord> &records) {
    std::map<std::string, std::map<uint64_t, std::vector<const RunRecord *>>> groups;
    for (const auto &r : records) {
        groups[r.model][r.seed].push_back(&r);
    }
    std::vector<Summary> out;
    for (const auto &[model, by_seed] : groups) {
        Summary s;
        s.model = model;
        s.seeds = static_cast<int>(by_seed.size());
        using Field = double (*)(const RunRecord &);
        std::vector<std::pair<MeanStd *, Field>> fields{
            {&s.em, [](const RunRecord &r) { return r.metrics.em; }},
            {&s.decoded_em, [](const RunRecord &r) { return r.decoded_em; }},
            {&s.bnr_exact_l1, [](const RunRecord &r) { return r.metrics.bnr_exact_l1; }},
            {&s.bnr_exact_all, [](const RunRecord &r) { return r.metrics.bnr_exact_all; }},
            {&s.bnr_eps_l1, [](const RunRecord &r) { return r.metrics.bnr_eps_l1; }},
            {&s.bnr_eps_all, [](const RunRecord &r) { return r.metrics.bnr_eps_all; }},
            {&s.prim_hit_in, [](const RunRecord &r) { return r.metrics.prim_hit_in; }},
            {&s.prim_best_in, [](const RunRecord &r) { return r.metrics.prim_best_in; }},
            {&s.prim_hit_layer_all, [](const RunRecord &r) { return r.metrics.prim_hit_layer_all; }},
            {&s.prim_best_layer_all, [](const RunRecord &r) { return r.metrics.prim_best_layer_all; }},
        };
        std::set<int> instances;
        size_t total = 0;
        for (auto &[field, get] : fields) {
            std::vector<double> per_seed;
            for (const auto &[seed, recs] : by_seed) {
                double sum = 0;
                for (const auto *r : recs) {
                    sum += get(*r);
                }
                per_seed.push_back(sum / static_cast<double>(recs.size()));
            }
            *field = mean_std(per_seed);
        }
        for (const auto &[seed, recs] : by_seed) {
            for (const auto *r : recs) {
                instances.insert(r->instance_id);
                s.params += static_cast<double>(r->model_params);
                s.label_tokens += r->label_tokens;
                s.decoded_tokens += r->metrics.expr_tokens;
                total++;
            }
        }
        s.instances = static_cast<int>(instances.size());
        if (total > 0) {
            s.params /= static_cast<double>(total);
            s.label_tokens /= static_cast<double>(total);
            s.decoded_tokens /= static_cast<double>(total);
        }
        out.push_back(s);
    }
    return out;
}

std::string format_summary(const std::vector<Summary> &rows) {
    std::ostringstream out;
    out << std::left << std::setw(16) << "model" << std::setw(8) << "seeds" << std::setw(8) << "inst"
        << std::setw(18) << "EM" << std::setw(12) << "params" << "\n";
    for (const auto &s : rows) {
        out << std::setw(16) << s.model << std::setw(8) << s.seeds << std::setw(8) << s.instances << std::setw(18)
            << fmt(s.em) << std::setw(12) << fmt(s.params, 1) << "\n";
    }
    out << "\n"
        << std::setw(16) << "model" << std::setw(18) << "BNR_exact(L1)" << std::setw(18) << "BNR_exact(all)"
        << std::setw(18) << "BNR_eps(L1)" << std::setw(18) << "BNR_eps(all)" << "\n";
    for (const auto &s : rows) {
        out << std::setw(16) << s.model << std::setw(18) << fmt(s.bnr_exact_l1) << std::setw(18)
            << fmt(s.bnr_exact_all) << std::setw(18) << fmt(s.bnr_eps_l1) << std::setw(18) << fmt(s.bnr_eps_all)
            << "\n";
    }
    out << "\n"
        << std::setw(16) << "model" << std::setw(18) << "primHit_in" << std::setw(18) << "primBest_in"
        << std::setw(20) << "primHit_layer" << std::setw(20) << "primBest_layer" << std::setw(14) << "decoded_EM"
        << std::setw(10) << "tokens" << "\n";
    for (const auto &s : rows) {
        out << std::setw(16) << s.model << std::setw(18) << fmt(s.prim_hit_in) << std::setw(18)
            << fmt(s.prim_best_in) << std::setw(20) << fmt(s.prim_hit_layer_all) << std::setw(20)
            << fmt(s.prim_best_layer_all) << std::setw(14) << fmt(s.decoded_em.mean) << std::setw(10)
            << fmt(s.decoded_tokens, 2) << "\n";
    }
    return out.str();
}

std::string summary_csv(const std::vector<Summary> &rows) {
    std::ostringstream out;
    out << "model,seeds,instances,em_mean,em_std,decoded_em_mean,bnr_exact_l1,bnr_exact_all,bnr_eps_l1,"
           "bnr_eps_all,primHit_in,primBest_in,primHit_layer_all,primBest_layer_all,params,label_tokens,"
           "decoded_tokens\n";
    for (const auto &s : rows) {
        out << s.model << ',' << s.seeds << ',' << s.instances << ',' << fmt(s.em.mean, 6) << ','
            << fmt(s.em.std, 6) << ',' << fmt(s.decoded_em.mean, 6) << ',' << fmt(s.bnr_exact_l1.mean, 6) << ','
            << fmt(s.bnr_exact_all.mean, 6) << ',' << fmt(s.bnr_eps_l1.mean, 6) << ','
            << fmt(s.bnr_eps_all.mean, 6) << ',' << fmt(s.prim_hit_in.mean, 6) << ','
            << fmt(s.prim_best_in.mean, 6) << ',' << fmt(s.prim_hit_layer_all.mean, 6) << ','
            << fmt(s.prim_best_layer_all.mean, 6) << ',' << fmt(s.params, 2) << ',' << fmt(s.label_tokens, 3)
            << ',' << fmt(s.decoded_tokens, 3) << '\n';
    }
    return out.str();
}

DiagReport recompute_metrics(const RunRecord &record, GateHistograms *hist) {
    const auto &a = record.artifacts;
    if (!a.contains("outputs")) {
        throw std::runtime_error("record " + record.run_id + " has no stored target table");
    }
    auto table = TruthTable::from_hex(record.num_bits, a.at("outputs").get<std::string>());
    if (record.model == "sbc") {
        if (!a.contains("circuit")) {
            throw std::runtime_error("record " + record.run_id + " has no stored circuit");
        }
        auto c = circuit_from_json(a.at("circuit"));
        DiagReport d = diagnose_circuit(c, table);
        d.em = record.metrics.em;
        if (hist) {
            auto h = circuit_histograms(c);
            *hist += h;
        }
        return d;
    }
    if (!a.contains("mlp_params")) {
        throw std::runtime_error("record " + record.run_id + " has no stored MLP weights");
    }
    DiagReport d = diagnose_mlp(mlp_params_from_json(a.at("mlp_params")), table);
    if (hist) {
        for (int g = 0; g < kNumGates; g++) {
            hist->mlp_all[g] += d.gate_histogram[g];
        }
    }
    return d;
}

std::vector<TvRow> tv_conformance(const std::vector<double> &deltas, int num_gates, long draws, uint64_t seed) {
    std::vector<TvRow> rows;
    Rng pick(seed);
    std::vector<int> gates;
    for (int k = 0; k < num_gates; k++) {
        gates.push_back(1 + static_cast<int>(pick.below(kNumGates)));
    }
    for (size_t d = 0; d < deltas.size(); d++) {
        for (size_t k = 0; k < gates.size(); k++) {
            TvRow row;
            row.delta = deltas[d];
            row.eta = gate_eta_for_delta(deltas[d]);
            row.gate = gates[k];
            row.draws = draws;
            std::vector<double> w(kNumGates, 0.0);
            w[row.gate - 1] = row.eta;
            Rng rng = Rng(seed).split(d * gates.size() + k + 1);
            for (long t = 0; t < draws; t++) {
                row.hits += gate_sample(w, rng).id() == row.gate;
            }
            row.rate = static_cast<double>(row.hits) / static_cast<double>(draws);
            double p = 1 - row.delta;
            row.sigma = std::sqrt(p * (1 - p) / static_cast<double>(draws));
            row.pass = std::abs(row.rate - p) <= 3 * row.sigma;
            rows.push_back(row);
        }
    }
    return rows;
}

std::string tv_csv(const std::vector<TvRow> &rows) {
    std::ostringstream out;
    out << "delta,eta,gate,draws,hits,rate,target,sigma,pass\n";
    out << std::setprecision(10);
    for (const auto &r : rows) {
        out << r.delta << ',' << r.eta << ',' << r.gate << ',' << r.draws << ',' << r.hits << ',' << r.rate << ','
            << 1 - r.delta << ',' << r.sigma << ',' << (r.pass ? 1 : 0) << '\n';
    }
    return out.str();
}

namespace {

std::string xml_escape(const std::string &s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            case '&':
                out += "&amp;";
                break;
            case '"':
                out += "&quot;";
                break;
            default:
                out += c;
        }
    }
    return out;
}

constexpr const char *kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace

std::string svg_line_plot(
    const std::string &title, const std::string &x_label, const std::string &y_label,
    const std::map<std::string, std::vector<std::pair<double, double>>> &series) {
    const double w = 640, h = 420, left = 70, right = 150, top = 40, bottom = 60;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    bool first = true;
    for (const auto &[name, pts] : series) {
        for (auto [x, y] : pts) {
            if (first) {
                x0 = x1 = x;
                first = false;
            }
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    if (x1 == x0) {
        x1 = x0 + 1;
    }
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (w - left - right); };
    auto py = [&](double y) { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); };
    std::ostringstream s;
    s << std::fixed << std::setprecision(2);
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
      << ' ' << h << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(title)
      << "</text>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\"" << h - bottom
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
      << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; t++) {
        double yv = y0 + (y1 - y0) * t / 4.0;
        double xv = x0 + (x1 - x0) * t / 4.0;
        s << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
          << fmt(yv, 2) << "</text>\n";
        s << "<text x=\"" << px(xv) << "\" y=\"" << h - bottom + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
          << fmt(xv, 1) << "</text>\n";
    }
    s << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 16 << "\" text-anchor=\"middle\" font-size=\"13\">"
      << xml_escape(x_label) << "</text>\n";
    s << "<text x=\"18\" y=\"" << (top + h - bottom) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << (top + h - bottom) / 2 << ")\">" << xml_escape(y_label) << "</text>\n";
    int k = 0;
    for (const auto &[name, pts] : series) {
        const char *color = kPalette[k % 6];
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (auto [x, y] : pts) {
            s << px(x) << ',' << py(y) << ' ';
        }
        s << "\"/>\n";
        for (auto [x, y] : pts) {
            s << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        double ly = top + 16 + 18 * k;
        s << "<rect x=\"" << w - right + 12 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"12\" fill=\"" << color
          << "\"/>\n";
        s << "<text x=\"" << w - right + 30 << "\" y=\"" << ly + 1 << "\" font-size=\"12\">" << xml_escape(name)
          << "</text>\n";
        k++;
    }
    s << "</svg>\n";
    return s.str();
}

std::string svg_bar_plot(
    const std::string &title, const std::vector<std::string> &labels,
    const std::map<std::string, std::vector<double>> &series) {
    const double w = 900, h = 420, left = 60, right = 140, top = 40, bottom = 110;
    double ymax = 0;
    for (const auto &[name, v] : series) {
        for (double x : v) {
            ymax = std::max(ymax, x);
        }
    }
    if (ymax <= 0) {
        ymax = 1;
    }
    size_t n = labels.size();
    double slot = (w - left - right) / static_cast<double>(std::max<size_t>(n, 1));
    double bar = slot * 0.8 / static_cast<double>(std::max<size_t>(series.size(), 1));
    std::ostringstream s;
    s << std::fixed << std::setprecision(2);
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
      << ' ' << h << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(title)
      << "</text>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\"" << h - bottom
      << "\" stroke=\"black\"/>\n";
    for (size_t i = 0; i < n; i++) {
        double cx = left + slot * (static_cast<double>(i) + 0.5);
        s << "<text x=\"" << cx << "\" y=\"" << h - bottom + 12 << "\" font-size=\"10\" text-anchor=\"end\" "
          << "transform=\"rotate(-60 " << cx << ' ' << h - bottom + 12 << ")\">" << xml_escape(labels[i])
          << "</text>\n";
    }
    int k = 0;
    for (const auto &[name, v] : series) {
        const char *color = kPalette[k % 6];
        for (size_t i = 0; i < n && i < v.size(); i++) {
            double bh = v[i] / ymax * (h - top - bottom);
            double x = left + slot * static_cast<double>(i) + slot * 0.1 + bar * k;
            s << "<rect x=\"" << x << "\" y=\"" << h - bottom - bh << "\" width=\"" << bar << "\" height=\"" << bh
              << "\" fill=\"" << color << "\"/>\n";
        }
        double ly = top + 16 + 18 * k;
        s << "<rect x=\"" << w - right + 12 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"12\" fill=\"" << color
          << "\"/>\n";
        s << "<text x=\"" << w - right + 30 << "\" y=\"" << ly + 1 << "\" font-size=\"12\">" << xml_escape(name)
          << "</text>\n";
        k++;
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace sbc
