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

// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/test_util.h"
#include "sbc/cli.h"
#include "sbc/compile.h"
#include "sbc/diag.h"
#include "sbc/stochastic.h"

using namespace sbc;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char *f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), f, a);
    return buf;
}

std::filesystem::path work_dir() {
    const char *env = std::getenv("SBC_ACCEPTANCE_DIR");
    std::filesystem::path dir = env ? env : "acceptance_runs";
    std::filesystem::create_directories(dir);
    return dir;
}

// 1. Every sampled circuit is a valid discrete circuit.
Outcome certifiable_structure() {
    Rng rng(101);
    long total = 0, valid = 0;
    for (int setting = 0; setting < 50; setting++) {
        StackConfig c;
        c.num_bits = 2 + static_cast<int>(rng.below(7));
        c.heads = 1 + static_cast<int>(rng.below(6));
        c.depth = 2 + static_cast<int>(rng.below(4));
        c.sigma16 = static_cast<InterpolantKind>(rng.below(3));
        c.use_lifting = rng.below(2) == 1;
        c.lift_width = 2 + static_cast<int>(rng.below(2 * c.num_bits - 1));
        c.route = static_cast<PairRoute>(rng.below(3));
        c.repel = rng.below(2) == 1;
        c.repel_mode = static_cast<RepelMode>(1 + rng.below(4));
        c.init_scale = std::vector<double>{0.1, 1.0, 4.0}[rng.below(3)];
        auto table = sbc_test::random_table(rng, c.num_bits);
        auto params = init_params(c, rng, &table);
        StackSchedule sched = StackSchedule::for_config(c, 0.05 + 2 * rng.uniform());
        for (int s = 0; s < 200; s++) {
            auto circuit = sample_circuit(params, sched, rng);
            valid += validate_circuit(circuit).ok() && circuit.num_input_bits == c.num_bits;
            total++;
        }
    }
    return {valid == total && total == 10000,
            std::to_string(valid) + "/" + std::to_string(total) + " sampled circuits valid (tolerance 0)"};
}

// 2. Gate selector concentration at eta = ln(15/delta - 15).
Outcome gate_tv_law() {
    auto rows = tv_conformance({0.5, 0.1, 0.01}, 3, 100000, 202);
    bool ok = rows.size() == 9;
    double worst = 0;
    for (const auto &r : rows) {
        ok = ok && r.pass;
        worst = std::max(worst, std::abs(r.rate - (1 - r.delta)) / r.sigma);
    }
    return {ok, "9 (delta, gate) cells, worst deviation " + fmt("%.2f", worst) + " sigma (limit 3)"};
}

// 3. Edge selector recovers (e_i, e_j) at a doubling-searched eta.
Outcome edge_recovery() {
    Rng rng(303);
    bool ok = true;
    double worst = 0, worst_eta = 0;
    for (int t = 0; t < 10; t++) {
        int n = 2 + static_cast<int>(rng.below(7));
        int i = static_cast<int>(rng.below(n));
        int j = static_cast<int>(rng.below(n - 1));
        j += j >= i;
        std::vector<double> w1(n, 0.0), w2(n, 0.0);
        w1[i] = 1;
        w2[j] = 1;
        double eta = 1;
        double err = edge_recovery_error(edge_selector(w1, w2, eta), i, j);
        while (err >= 0.05 && eta < 1e6) {
            eta *= 2;
            err = edge_recovery_error(edge_selector(w1, w2, eta), i, j);
        }
        ok = ok && err < 0.05;
        worst = std::max(worst, err);
        worst_eta = std::max(worst_eta, eta);
        double prev = INFINITY;
        for (double g = 0.5; g <= 64; g *= 1.25) {
            double e = edge_recovery_error(edge_selector(w1, w2, g), i, j);
            ok = ok && e < prev;
            prev = e;
        }
    }
    return {ok, "10 pairs, worst L1 error " + fmt("%.4f", worst) + " (limit 0.05) at eta <= " + fmt("%g", worst_eta) +
                    "; strictly decreasing on the eta grid"};
}

// 4. Compile-then-sample on small random tables.
Outcome universality() {
    Rng rng(404);
    const double delta = 0.05;
    const int samples = 2000;
    double sigma = std::sqrt(delta * (1 - delta) / samples);
    int decode_ok = 0, sample_ok = 0;
    double worst = 1;
    for (int t = 0; t < 50; t++) {
        int b = 1 + static_cast<int>(rng.below(4));
        auto table = sbc_test::random_table(rng, b);
        auto compiled = compile_params(dnf_tree(table), delta);
        decode_ok += circuit_table(decode_argmax(compiled.params, compiled.schedule).circuit) == table;
        int hits = 0;
        for (int s = 0; s < samples; s++) {
            hits += circuit_table(sample_circuit(compiled.params, compiled.schedule, rng)) == table;
        }
        double rate = static_cast<double>(hits) / samples;
        worst = std::min(worst, rate);
        sample_ok += rate >= 1 - delta - 3 * sigma;
    }
    return {decode_ok == 50 && sample_ok == 50,
            "worst success " + fmt("%.4f", worst) + " (limit " + fmt("%.4f", 1 - delta - 3 * sigma) +
                "); decode EM 1 on " + std::to_string(decode_ok) + "/50"};
}

// 5. DNF tree correctness and size bounds.
Outcome tree_bounds() {
    Rng rng(505);
    int ok = 0;
    for (int t = 0; t < 200; t++) {
        int b = 1 + static_cast<int>(rng.below(4));
        auto table = sbc_test::random_table(rng, b);
        auto tree = dnf_tree(table);
        bool same = true;
        for (size_t r = 0; r < table.size(); r++) {
            same = same && circuit_eval(tree.circuit, input_bits(r, b)) == table[r];
        }
        int b_up = static_cast<int>(tree.circuit.lift_select.size());
        int depth = tree.circuit.depth() - 1;
        int depth_bound = b + static_cast<int>(std::ceil(std::log2(b)));
        ok += same && static_cast<int>(tree.circuit.gate_count()) == b_up - 1 && b_up <= 2 * b * (1 << b) &&
              depth <= depth_bound && tree.report.depth == depth;
    }
    return {ok == 200, std::to_string(ok) + "/200 trees exact with gate_count = B_up - 1 and both bounds"};
}

// 6. Full objective gradient against central differences.
Outcome gradient_correctness() {
    Rng rng(606);
    TrainConfig cfg;
    cfg.lam_ent = 0.03;
    cfg.lam_div_units = 0.02;
    cfg.lam_div_rows = 0.05;
    cfg.lam_const16 = 0.04;
    double worst = 0;
    for (int t = 0; t < 10; t++) {
        StackConfig c;
        c.num_bits = 3;
        c.heads = 4;
        c.depth = 3;
        c.sigma16 = static_cast<InterpolantKind>(t % 3);
        c.s_start = 0.4;
        c.s_end = 0.2;
        c.init_scale = 0.5;
        auto table = sbc_test::random_table(rng, 3);
        auto p = init_params(c, rng, &table);
        StackSchedule sched{{1.5, 1.0, 0.7}, {0.4, 0.3, 0.2}};
        auto res = loss_total(p, sched, table, cfg);
        worst = std::max(worst, sbc_test::max_rel_fd_error(p.values, res.grad, [&]() {
                             return loss_total(p, sched, table, cfg).loss.total;
                         }));
    }
    return {worst <= 1e-4, "worst relative error " + fmt("%.2e", worst) + " over 10 instances (limit 1e-4)"};
}

// 7. sigma16 reproduces every gate at every corner.
Outcome corner_exactness() {
    double worst = 0;
    for (auto mode : {InterpolantMode::lagrange(), InterpolantMode::rbf(0.1), InterpolantMode::bump(0.9)}) {
        for (int c = 0; c < kNumCorners; c++) {
            auto v = sigma16(mode, kCorners[c][0], kCorners[c][1]);
            for (int g = 1; g <= kNumGates; g++) {
                worst = std::max(worst, std::abs(v[g - 1] - gate_bit(g, c)));
            }
        }
    }
    double leak = 0;
    for (int c = 0; c < kNumCorners; c++) {
        auto v = sigma16(InterpolantMode::rbf(0.35), kCorners[c][0], kCorners[c][1]);
        for (int g = 1; g <= kNumGates; g++) {
            leak = std::max(leak, std::abs(v[g - 1] - gate_bit(g, c)));
        }
    }
    return {worst <= 1e-12, "max deviation " + fmt("%.1e", worst) +
                                " (limit 1e-12; rbf at s = 0.1, radius 0.9); rbf at s = 0.35 deviates by " +
                                fmt("%.1e", leak)};
}

GenConfig benchmark_generator(int count, uint64_t seed) {
    GenConfig g;
    g.bits_min = 4;
    g.bits_max = 8;
    g.count = count;
    g.seed = seed;
    g.max_terms = 4;
    g.max_arity = 3;
    g.p_macro = 0.3;
    return g;
}

// 8 and 9. Headline EM and BNR separation on the regenerated suite.
std::pair<Outcome, Outcome> headline() {
    auto data = generate_dataset(benchmark_generator(100, 2026));
    ExperimentConfig cfg;
    cfg.s_rule = ScaleRule::add(10);
    cfg.l_rule = ScaleRule::add(0);
    cfg.stack.sigma16 = InterpolantKind::kRbf;
    auto path = (work_dir() / "headline.jsonl").string();
    auto grid = run_grid(
        data, {ModelSpec{}, ModelSpec{true, MatchRegime::kNeuron}}, {0, 1, 2, 3, 4}, cfg, path, worker_count());
    auto rows = summarize(grid.records);
    const Summary *sbc = nullptr, *mlp = nullptr;
    for (const auto &r : rows) {
        (r.model == "sbc" ? sbc : mlp) = &r;
    }
    Outcome em, bnr;
    if (!sbc || !mlp || grid.failed > 0) {
        em.detail = bnr.detail = std::to_string(grid.failed) + " cells failed";
        return {em, bnr};
    }
    double tokens = 0;
    for (const auto &d : data) {
        tokens += expr_tokens(d.formula);
    }
    em.pass = sbc->em.mean >= 0.90 && mlp->em.mean >= 0.95;
    em.detail = "SBC " + fmt("%.3f", sbc->em.mean) + " +- " + fmt("%.3f", sbc->em.std) + " (limit 0.90), MLP " +
                fmt("%.3f", mlp->em.mean) + " +- " + fmt("%.3f", mlp->em.std) + " (limit 0.95); 100 instances x 5 seeds" +
                ", label tokens " + fmt("%.2f", tokens / static_cast<double>(data.size())) + ", MLP params " +
                fmt("%.0f", mlp->params) + ", SBC decoded EM " + fmt("%.3f", sbc->decoded_em.mean);
    bool every_run = true;
    for (const auto &r : grid.records) {
        if (r.model == "sbc") {
            every_run = every_run && r.metrics.bnr_exact_l1 == 1.0 && r.metrics.bnr_exact_all == 1.0 &&
                        r.metrics.bnr_eps_l1 == 1.0 && r.metrics.bnr_eps_all == 1.0;
        }
    }
    double m = mlp->bnr_exact_all.mean;
    bnr.pass = every_run && m >= 0.05 && m <= 0.40;
    bnr.detail = std::string("SBC BNR_exact = BNR_eps = 1 on ") + (every_run ? "every" : "NOT every") +
                 " run; MLP BNR_exact(all) " + fmt("%.3f", m) + " (range [0.05, 0.40]), L1 " +
                 fmt("%.3f", mlp->bnr_exact_l1.mean);
    return {em, bnr};
}

// 10. A generic ReLU unit is not BNR.
Outcome relu_not_bnr() {
    Rng rng(1010);
    const int trials = 10000;
    double rate = relu_bnr_failure_trial(10, trials, rng);
    double bound = 1 - 12.0 / 1024;
    double sigma = std::sqrt(bound * (1 - bound) / trials);
    return {rate >= bound - 3 * sigma,
            "failure rate " + fmt("%.4f", rate) + " (limit " + fmt("%.4f", bound - 3 * sigma) + ")"};
}

// 11. Interpolant ablation ordering.
Outcome sigma16_ordering() {
    auto data = generate_dataset(benchmark_generator(30, 1111));
    auto path = (work_dir() / "ablation.jsonl").string();
    std::map<std::string, double> em;
    for (const char *mode : {"rbf", "bump", "lagrange"}) {
        ExperimentConfig cfg;
        cfg.stack.sigma16 = interpolant_from_name(mode);
        auto grid = run_grid(data, {ModelSpec{}}, {0}, cfg, path, worker_count());
        auto rows = summarize(grid.records);
        em[mode] = rows.empty() || grid.failed ? -1 : rows.front().em.mean;
    }
    return {em["rbf"] >= em["lagrange"] + 0.05,
            "rbf " + fmt("%.3f", em["rbf"]) + ", bump " + fmt("%.3f", em["bump"]) + ", lagrange " +
                fmt("%.3f", em["lagrange"]) + " (need rbf >= lagrange + 0.05)"};
}

// 12. Identical seeds and configs give identical records.
Outcome determinism() {
    auto dir = work_dir() / "determinism";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto data = generate_dataset(benchmark_generator(4, 1212));
    ExperimentConfig cfg;
    cfg.train.max_steps = 600;
    std::vector<ModelSpec> models{ModelSpec{}, ModelSpec{true, MatchRegime::kNeuron},
                                  ModelSpec{true, MatchRegime::kParamTotal}};
    auto a = (dir / "a.jsonl").string(), b = (dir / "b.jsonl").string();
    run_grid(data, models, {0, 1}, cfg, a, 1);
    run_grid(data, models, {0, 1}, cfg, b, std::max(2, worker_count()));
    auto ra = read_records(a), rb = read_records(b);
    bool same = ra.size() == rb.size() && ra.size() == 24;
    for (size_t i = 0; same && i < ra.size(); i++) {
        same = ra[i].comparison_json().dump() == rb[i].comparison_json().dump();
    }
    auto ga = (dir / "ga.jsonl").string(), gb = (dir / "gb.jsonl").string();
    write_dataset(generate_dataset(benchmark_generator(50, 7)), ga);
    write_dataset(generate_dataset(benchmark_generator(50, 7)), gb);
    std::ifstream fa(ga), fb(gb);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    bool data_same = sa.str() == sb.str();
    return {same && data_same, std::to_string(ra.size()) + " run records byte-identical modulo wall time" +
                                   (same ? "" : " FAILED") + "; datasets " + (data_same ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char **argv) {
    std::set<int> only;
    for (int i = 1; i < argc; i++) {
        only.insert(std::atoi(argv[i]));
    }
    auto wanted = [&](int k) { return only.empty() || only.count(k); };
    int failures = 0;
    auto report = [&](int k, const char *name, const Outcome &o, double seconds) {
        std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", k, name, o.detail.c_str(),
                    seconds);
        std::fflush(stdout);
        failures += !o.pass;
    };
    auto timed = [&](int k, const char *name, const std::function<Outcome()> &f) {
        if (!wanted(k)) {
            return;
        }
        auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = f();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        report(k, name, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    };
    timed(1, "certifiable structure", certifiable_structure);
    timed(2, "gate-selector TV law", gate_tv_law);
    timed(3, "edge recovery", edge_recovery);
    timed(4, "universality at desk scale", universality);
    timed(5, "tree construction bounds", tree_bounds);
    timed(6, "gradient correctness", gradient_correctness);
    timed(7, "interpolant corner exactness", corner_exactness);
    if (wanted(8) || wanted(9)) {
        auto start = std::chrono::steady_clock::now();
        std::pair<Outcome, Outcome> r;
        try {
            r = headline();
        } catch (const std::exception &e) {
            r.first = r.second = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (wanted(8)) {
            report(8, "headline EM", r.first, secs);
        }
        if (wanted(9)) {
            report(9, "BNR separation", r.second, 0.0);
        }
    }
    timed(10, "ReLU not BNR", relu_not_bnr);
    timed(11, "sigma16 ablation ordering", sigma16_ordering);
    timed(12, "determinism", determinism);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
