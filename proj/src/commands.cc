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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sbc/cli.h"
#include "sbc/compile.h"
#include "sbc/expression.h"

namespace sbc {

namespace {

nlohmann::json read_json_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "'");
    }
    return nlohmann::json::parse(in);
}

void write_text(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    out << text;
}

std::vector<uint64_t> seed_list(int count, uint64_t offset) {
    std::vector<uint64_t> seeds;
    for (int i = 0; i < count; i++) {
        seeds.push_back(offset + static_cast<uint64_t>(i));
    }
    return seeds;
}

std::vector<TaskInstance> load_instances(const std::string &path, int limit) {
    auto data = read_dataset(path);
    if (limit > 0 && static_cast<size_t>(limit) < data.size()) {
        data.resize(static_cast<size_t>(limit));
    }
    return data;
}

/// Options shared by the training commands.
struct RunOptions {
    std::string data;
    std::string config_path;
    int seeds = 5;
    uint64_t seed_offset = 0;
    int limit = 0;
    int workers = 0;
    std::vector<int> s_add;
    std::vector<int> l_add;
    std::string sigma16;
    int max_steps = 0;

    void add_to(CLI::App *cmd, bool grid) {
        cmd->add_option("--data", data, "Dataset JSONL")->required();
        cmd->add_option("--config", config_path, "Experiment config JSON");
        cmd->add_option("--seeds", seeds, "Number of seeds per instance")->check(CLI::PositiveNumber);
        cmd->add_option("--seed-offset", seed_offset, "First seed");
        cmd->add_option("--limit", limit, "Use only the first N instances");
        cmd->add_option("--workers", workers, "Worker threads (default: SBC_WORKERS or all cores)");
        cmd->add_option("--max-steps", max_steps, "Override the training step budget");
        if (!grid) {
            cmd->add_option("--s-add", s_add, "Additive width budget")->expected(1);
            cmd->add_option("--l-add", l_add, "Additive depth budget")->expected(1);
            cmd->add_option("--sigma16", sigma16, "Gate interpolant: rbf, bump or lagrange");
        }
    }

    ExperimentConfig config() const {
        ExperimentConfig c;
        if (!config_path.empty()) {
            c = ExperimentConfig::from_json(read_json_file(config_path), c);
        }
        if (!s_add.empty()) {
            c.s_rule = ScaleRule::add(s_add[0]);
        }
        if (!l_add.empty()) {
            c.l_rule = ScaleRule::add(l_add[0]);
        }
        if (!sigma16.empty()) {
            c.stack.sigma16 = interpolant_from_name(sigma16);
        }
        if (max_steps > 0) {
            c.train.max_steps = max_steps;
            c.mlp_train.max_steps = max_steps;
        }
        c.train.validate();
        c.mlp_train.validate();
        return c;
    }

    int worker_threads() const {
        return workers > 0 ? workers : worker_count();
    }
};

int report_failures(const GridResult &g, std::ostream &err) {
    for (const auto &e : g.errors) {
        err << "cell failed: " << e << "\n";
    }
    return g.failed == 0 ? 0 : 1;
}

int cmd_gen_data(
    const GenConfig &flags, const std::string &config_path, const std::string &out_path, CLI::App *cmd,
    std::ostream &out) {
    GenConfig c;
    if (!config_path.empty()) {
        c = GenConfig::from_json(read_json_file(config_path));
    }
    auto given = [&](const char *name) { return cmd->count(name) > 0; };
    if (given("--bits-min")) c.bits_min = flags.bits_min;
    if (given("--bits-max")) c.bits_max = flags.bits_max;
    if (given("--count")) c.count = flags.count;
    if (given("--seed")) c.seed = flags.seed;
    if (given("--max-terms")) c.max_terms = flags.max_terms;
    if (given("--max-arity")) c.max_arity = flags.max_arity;
    if (given("--p-macro")) c.p_macro = flags.p_macro;
    c.validate();
    auto data = generate_dataset(c);
    write_dataset(data, out_path);
    double tokens = 0;
    for (const auto &d : data) {
        tokens += expr_tokens(d.formula);
    }
    out << "wrote " << data.size() << " instances to " << out_path << " (mean label tokens "
        << (data.empty() ? 0.0 : tokens / static_cast<double>(data.size())) << ")\n";
    out << "gen_config " << c.to_json().dump() << "\n";
    return 0;
}

int cmd_train(
    const RunOptions &opt, const std::vector<std::string> &models, const std::string &match, const std::string &out_path,
    std::ostream &out, std::ostream &err) {
    auto config = opt.config();
    std::vector<ModelSpec> specs;
    for (const auto &m : models) {
        auto spec = ModelSpec::parse(m);
        if (spec.mlp && m == "mlp") {
            spec.regime = regime_from_name(match);
        }
        specs.push_back(spec);
    }
    auto data = load_instances(opt.data, opt.limit);
    auto grid = run_grid(data, specs, seed_list(opt.seeds, opt.seed_offset), config, out_path, opt.worker_threads());
    out << format_summary(summarize(grid.records));
    return report_failures(grid, err);
}

struct CompileOptions {
    int bits = 0;
    std::string function;
    double delta = 0.05;
    long samples = 2000;
    uint64_t seed = 0;
    bool no_junta = false;
};

TruthTable parse_function(const std::string &spec, int bits) {
    bool formula = spec.find('x') != std::string::npos;
    if (formula) {
        auto e = parse_expression(spec);
        int b = bits > 0 ? bits : std::max(1, e.num_vars_used());
        if (e.num_vars_used() > b) {
            throw std::invalid_argument("formula uses more than --bits variables");
        }
        return expression_table(e, b);
    }
    if (bits <= 0) {
        throw std::invalid_argument("a hex truth table needs --bits");
    }
    auto t = TruthTable::from_hex(bits, spec);
    return t;
}

int cmd_compile(const CompileOptions &o, std::ostream &out) {
    auto t = parse_function(o.function, o.bits);
    int b = t.num_bits();
    auto tree = o.no_junta ? dnf_tree(t) : compile_tree(t);
    auto compiled = compile_params(tree, o.delta);
    auto decoded = decode_argmax(compiled.params, compiled.schedule);
    double decode_em = exact_match(circuit_table(decoded.circuit), t);
    Rng rng(o.seed);
    long ok = 0;
    for (long s = 0; s < o.samples; s++) {
        ok += circuit_table(sample_circuit(compiled.params, compiled.schedule, rng)) == t;
    }
    double rate = o.samples > 0 ? static_cast<double>(ok) / static_cast<double>(o.samples) : 0.0;
    double p = 1 - o.delta;
    double sigma = o.samples > 0 ? std::sqrt(p * (1 - p) / static_cast<double>(o.samples)) : 0.0;
    int b_up_bound = 2 * b * (1 << b);
    int depth_bound = b + static_cast<int>(std::ceil(std::log2(static_cast<double>(b))));
    nlohmann::json j{
        {"B", b},
        {"table", t.to_hex()},
        {"report", compiled.report.to_json()},
        {"samples", o.samples},
        {"successes", ok},
        {"success_rate", rate},
        {"target", p},
        {"sigma", sigma},
        {"success_ok", rate >= p - 3 * sigma},
        {"decode_em", decode_em},
        {"bounds",
         {{"b_up", compiled.report.b_up},
          {"b_up_bound", b_up_bound},
          {"b_up_ok", compiled.report.b_up <= b_up_bound},
          {"depth", compiled.report.depth},
          {"depth_bound", depth_bound},
          {"depth_ok", compiled.report.depth <= depth_bound},
          {"gate_count", compiled.report.gate_count},
          {"gate_count_ok", compiled.report.gate_count == compiled.report.b_up - 1}}},
        {"expression", render(decoded.expression)},
    };
    out << j.dump(2) << "\n";
    return decode_em == 1.0 && rate >= p - 3 * sigma ? 0 : 1;
}

int cmd_sweep(
    const RunOptions &opt, const std::vector<int> &s_adds, const std::vector<int> &l_adds, const std::string &model,
    const std::string &out_dir, std::ostream &out, std::ostream &err) {
    std::filesystem::create_directories(out_dir);
    auto base = opt.config();
    auto data = load_instances(opt.data, opt.limit);
    auto seeds = seed_list(opt.seeds, opt.seed_offset);
    auto records_path = (std::filesystem::path(out_dir) / "records.jsonl").string();
    std::ostringstream csv;
    csv << "l_add,s_add,em_mean,em_std,decoded_em_mean,runs\n";
    std::map<std::string, std::vector<std::pair<double, double>>> series;
    int status = 0;
    for (int l : l_adds) {
        for (int s : s_adds) {
            auto c = base;
            c.s_rule = ScaleRule::add(s);
            c.l_rule = ScaleRule::add(l);
            auto grid = run_grid(data, {ModelSpec::parse(model)}, seeds, c, records_path, opt.worker_threads());
            status |= report_failures(grid, err);
            auto sum = summarize(grid.records);
            Summary row = sum.empty() ? Summary{} : sum.front();
            csv << l << ',' << s << ',' << row.em.mean << ',' << row.em.std << ',' << row.decoded_em.mean << ','
                << grid.records.size() << '\n';
            series["L_add=" + std::to_string(l)].push_back({static_cast<double>(s), row.em.mean});
            out << "L_add=" << l << " S_add=" << s << " EM " << row.em.mean << " +- " << row.em.std << "\n";
        }
    }
    write_text(std::filesystem::path(out_dir) / "sweep.csv", csv.str());
    write_text(std::filesystem::path(out_dir) / "sweep.svg", svg_line_plot("EM vs S_add", "S_add", "mean EM", series));
    return status;
}

int cmd_ablate(
    const RunOptions &opt, const std::vector<std::string> &modes, const std::string &out_dir, std::ostream &out,
    std::ostream &err) {
    std::filesystem::create_directories(out_dir);
    auto base = opt.config();
    auto data = load_instances(opt.data, opt.limit);
    auto seeds = seed_list(opt.seeds, opt.seed_offset);
    auto records_path = (std::filesystem::path(out_dir) / "records.jsonl").string();
    std::ostringstream csv;
    csv << "mode,em_mean,em_std,decoded_em_mean,runs,seeds\n";
    int status = 0;
    out << "mode        EM                decoded_EM\n";
    for (const auto &mode : modes) {
        auto c = base;
        c.stack.sigma16 = interpolant_from_name(mode);
        auto grid = run_grid(data, {ModelSpec{}}, seeds, c, records_path, opt.worker_threads());
        status |= report_failures(grid, err);
        auto sum = summarize(grid.records);
        Summary row = sum.empty() ? Summary{} : sum.front();
        std::string seed_text;
        for (size_t i = 0; i < seeds.size(); i++) {
            seed_text += (i ? ";" : "") + std::to_string(seeds[i]);
        }
        csv << mode << ',' << row.em.mean << ',' << row.em.std << ',' << row.decoded_em.mean << ','
            << grid.records.size() << ',' << seed_text << '\n';
        std::ostringstream em;
        em << std::fixed << std::setprecision(3) << row.em.mean << " +- " << row.em.std;
        out << std::left << std::setw(12) << mode << std::setw(18) << em.str() << std::fixed << std::setprecision(3)
            << row.decoded_em.mean << "\n";
    }
    write_text(std::filesystem::path(out_dir) / "ablation.csv", csv.str());
    return status;
}

int cmd_diagnose(const std::string &run, const std::string &report_dir, std::ostream &out) {
    auto records = read_records(run);
    if (records.empty()) {
        throw std::runtime_error("no records in '" + run + "'");
    }
    GateHistograms hist;
    for (auto &r : records) {
        r.metrics = recompute_metrics(r, &hist);
    }
    std::filesystem::create_directories(report_dir);
    auto rows = summarize(records);
    std::filesystem::path dir(report_dir);
    write_text(dir / "summary.csv", summary_csv(rows));
    write_text(dir / "gate_histograms.csv", hist.to_csv());
    std::vector<std::string> labels;
    std::map<std::string, std::vector<double>> series;
    auto normalized = [](const std::array<long, kNumGates> &h) {
        double total = 0;
        for (long v : h) {
            total += static_cast<double>(v);
        }
        std::vector<double> out;
        for (long v : h) {
            out.push_back(total > 0 ? static_cast<double>(v) / total : 0.0);
        }
        return out;
    };
    for (int g = 1; g <= kNumGates; g++) {
        labels.emplace_back(gate_name(g));
    }
    series["SBC all"] = normalized(hist.sbc_all);
    series["SBC path"] = normalized(hist.sbc_path);
    series["MLP all"] = normalized(hist.mlp_all);
    write_text(dir / "gate_histograms.svg", svg_bar_plot("Gate-type frequencies", labels, series));
    out << format_summary(rows);
    return 0;
}

int cmd_tv(
    const std::vector<double> &deltas, int gates, long draws, uint64_t seed, const std::string &out_path,
    std::ostream &out) {
    auto rows = tv_conformance(deltas, gates, draws, seed);
    auto csv = tv_csv(rows);
    if (out_path.empty()) {
        out << csv;
    } else {
        write_text(out_path, csv);
    }
    bool ok = true;
    for (const auto &r : rows) {
        ok = ok && r.pass;
    }
    return ok ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Stochastic Boolean circuit experiments"};
    app.require_subcommand(1);

    GenConfig gen;
    std::string gen_config, gen_out;
    auto *gen_cmd = app.add_subcommand("gen-data", "Generate a random formula dataset");
    gen_cmd->add_option("--bits-min", gen.bits_min);
    gen_cmd->add_option("--bits-max", gen.bits_max);
    gen_cmd->add_option("--count", gen.count);
    gen_cmd->add_option("--seed", gen.seed);
    gen_cmd->add_option("--max-terms", gen.max_terms);
    gen_cmd->add_option("--max-arity", gen.max_arity);
    gen_cmd->add_option("--p-macro", gen.p_macro);
    gen_cmd->add_option("--config", gen_config, "Generator config JSON");
    gen_cmd->add_option("--out", gen_out)->required();

    RunOptions train_opt;
    std::vector<std::string> train_models{"sbc"};
    std::string match = "neuron", train_out;
    auto *train_cmd = app.add_subcommand("train", "Train models on every instance and seed");
    train_opt.add_to(train_cmd, false);
    train_cmd->add_option("--model", train_models, "sbc, mlp or mlp:<regime>; repeatable")->delimiter(',');
    train_cmd->add_option("--match", match, "MLP matching regime for --model mlp")
        ->check(CLI::IsMember({"neuron", "param_soft", "param_total"}));
    train_cmd->add_option("--out", train_out, "RunRecord JSONL (appended, resumable)")->required();

    CompileOptions comp;
    auto *comp_cmd = app.add_subcommand("compile", "Compile a truth table and verify sampled circuits");
    comp_cmd->add_option("--bits", comp.bits);
    comp_cmd->add_option("--function", comp.function, "Hex truth table or formula")->required();
    comp_cmd->add_option("--delta", comp.delta);
    comp_cmd->add_option("--samples", comp.samples);
    comp_cmd->add_option("--seed", comp.seed);
    comp_cmd->add_flag("--no-junta", comp.no_junta, "Always compile the full DNF tree");

    RunOptions sweep_opt;
    std::vector<int> s_adds{0, 5, 10}, l_adds{0, 1};
    std::string sweep_model = "sbc", sweep_dir;
    auto *sweep_cmd = app.add_subcommand("sweep", "Grid over additive width and depth budgets");
    sweep_opt.add_to(sweep_cmd, true);
    sweep_cmd->add_option("--s-add", s_adds)->delimiter(',');
    sweep_cmd->add_option("--l-add", l_adds)->delimiter(',');
    sweep_cmd->add_option("--model", sweep_model);
    sweep_cmd->add_option("--out-dir", sweep_dir)->required();

    RunOptions ablate_opt;
    std::vector<std::string> modes{"rbf", "bump", "lagrange"};
    std::string ablate_dir;
    auto *ablate_cmd = app.add_subcommand("ablate-sigma16", "Compare gate interpolants");
    ablate_opt.add_to(ablate_cmd, true);
    ablate_cmd->add_option("--modes", modes)->delimiter(',');
    ablate_cmd->add_option("--out-dir", ablate_dir)->required();

    std::string diag_run, diag_report;
    auto *diag_cmd = app.add_subcommand("diagnose", "Recompute diagnostics from stored runs");
    diag_cmd->add_option("--run", diag_run)->required();
    diag_cmd->add_option("--report", diag_report)->required();

    std::vector<double> deltas{0.5, 0.1, 0.01};
    int tv_gates = 3;
    long tv_draws = 100000;
    uint64_t tv_seed = 0;
    std::string tv_out;
    auto *tv_cmd = app.add_subcommand("tv", "Gate-selector concentration test vectors");
    tv_cmd->add_option("--deltas", deltas)->delimiter(',');
    tv_cmd->add_option("--gates", tv_gates);
    tv_cmd->add_option("--draws", tv_draws);
    tv_cmd->add_option("--seed", tv_seed);
    tv_cmd->add_option("--out", tv_out, "CSV path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e, out, err);
    }

    try {
        if (*gen_cmd) {
            return cmd_gen_data(gen, gen_config, gen_out, gen_cmd, out);
        }
        if (*train_cmd) {
            return cmd_train(train_opt, train_models, match, train_out, out, err);
        }
        if (*comp_cmd) {
            return cmd_compile(comp, out);
        }
        if (*sweep_cmd) {
            return cmd_sweep(sweep_opt, s_adds, l_adds, sweep_model, sweep_dir, out, err);
        }
        if (*ablate_cmd) {
            return cmd_ablate(ablate_opt, modes, ablate_dir, out, err);
        }
        if (*diag_cmd) {
            return cmd_diagnose(diag_run, diag_report, out);
        }
        if (*tv_cmd) {
            return cmd_tv(deltas, tv_gates, tv_draws, tv_seed, tv_out, out);
        }
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace sbc
