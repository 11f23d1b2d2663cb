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

#ifndef SBC_CLI_H
#define SBC_CLI_H

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sbc/diag.h"
#include "sbc/mlp.h"
#include "sbc/stack.h"
#include "sbc/taskgen.h"
#include "sbc/train.h"

namespace sbc {

/// "sbc" or "mlp:<regime>".
struct ModelSpec {
    bool mlp = false;
    MatchRegime regime = MatchRegime::kNeuron;

    std::string name() const;
    static ModelSpec parse(const std::string &name);
    bool operator==(const ModelSpec &) const = default;
};

/// Everything besides the instance and seed that determines a run.
struct ExperimentConfig {
    /// num_bits, heads and depth are filled per instance.
    StackConfig stack;
    TrainConfig train;
    TrainConfig mlp_train;
    ScaleRule s_rule = ScaleRule::add(10);
    ScaleRule l_rule = ScaleRule::identity();

    ExperimentConfig();
    nlohmann::json to_json() const;
    /// Keys missing from `j` keep their values in `base`.
    static ExperimentConfig from_json(const nlohmann::json &j, const ExperimentConfig &base = ExperimentConfig());
};

/// One (instance, model, seed) cell.
struct RunRecord {
    std::string run_id;
    uint64_t seed = 0;
    int instance_id = 0;
    std::string model;
    nlohmann::json config;
    DiagReport metrics;
    std::string decoded_expression;
    int label_tokens = 0;
    int num_bits = 0;
    int s_model = 0;
    int l_model = 0;
    size_t model_params = 0;
    double decoded_em = 0;
    double row_acc = 0;
    int steps = 0;
    int best_step = 0;
    std::string stop_reason;
    bool nan_abort = false;
    double wall_time_s = 0;
    /// Target table (hex) plus the decoded circuit or MLP weights.
    nlohmann::json artifacts;

    nlohmann::json to_json() const;
    static RunRecord from_json(const nlohmann::json &j);
    /// to_json without wall-time fields.
    nlohmann::json comparison_json() const;
};

/// Stable id of a cell; includes a digest of the effective configuration.
std::string make_run_id(const ModelSpec &model, int instance_id, uint64_t seed, const nlohmann::json &config);

/// Training seed of a cell.
uint64_t cell_seed(int instance_id, uint64_t seed);

/// Effective configuration of a cell, as echoed into its record.
nlohmann::json cell_config(const TaskInstance &inst, const ModelSpec &model, const ExperimentConfig &config);

RunRecord run_cell(const TaskInstance &inst, const ModelSpec &model, uint64_t seed, const ExperimentConfig &config);

/// Reads a JSONL record file; a missing file yields no records.
std::vector<RunRecord> read_records(const std::string &path);
/// Appends records under an exclusive file lock.
void append_records(const std::string &path, const std::vector<RunRecord> &records);

/// Worker count from SBC_WORKERS, else the hardware concurrency.
int worker_count();

struct GridResult {
    std::vector<RunRecord> records;  // requested cells, in cell order
    int failed = 0;
    std::vector<std::string> errors;
};

/// Runs instance x seed x model cells (in that nesting order) on `workers`
/// threads. Cells whose run_id already appears in `out_path` are reused
/// instead of rerun; new records are appended in cell order. An empty
/// `out_path` disables persistence.
GridResult run_grid(
    const std::vector<TaskInstance> &instances, const std::vector<ModelSpec> &models,
    const std::vector<uint64_t> &seeds, const ExperimentConfig &config, const std::string &out_path, int workers);

struct MeanStd {
    double mean = 0;
    double std = 0;  // sample standard deviation across seeds
};

/// Per-model aggregate. Every metric is averaged over instances within a
/// seed, then summarized across seeds.
struct Summary {
    std::string model;
    int seeds = 0;
    int instances = 0;
    MeanStd em, decoded_em;
    MeanStd bnr_exact_l1, bnr_exact_all, bnr_eps_l1, bnr_eps_all;
    MeanStd prim_hit_in, prim_best_in, prim_hit_layer_all, prim_best_layer_all;
    double params = 0;
    double label_tokens = 0;
    double decoded_tokens = 0;
};

std::vector<Summary> summarize(const std::vector<RunRecord> &records);
std::string format_summary(const std::vector<Summary> &rows);
std::string summary_csv(const std::vector<Summary> &rows);

/// Recomputes trace metrics from a record's stored artifacts. Throws
/// std::runtime_error when the artifacts are missing.
DiagReport recompute_metrics(const RunRecord &record, GateHistograms *hist = nullptr);

/// Empirical gate-selector concentration at eta = ln(15/delta - 15).
struct TvRow {
    double delta = 0;
    double eta = 0;
    int gate = 0;
    long draws = 0;
    long hits = 0;
    double rate = 0;
    double sigma = 0;  // binomial standard deviation of the rate at 1 - delta
    bool pass = false;  // |rate - (1 - delta)| <= 3 sigma
};

std::vector<TvRow> tv_conformance(
    const std::vector<double> &deltas, int num_gates, long draws, uint64_t seed);
std::string tv_csv(const std::vector<TvRow> &rows);

/// Minimal standalone SVG plots.
std::string svg_line_plot(
    const std::string &title, const std::string &x_label, const std::string &y_label,
    const std::map<std::string, std::vector<std::pair<double, double>>> &series);
std::string svg_bar_plot(
    const std::string &title, const std::vector<std::string> &labels,
    const std::map<std::string, std::vector<double>> &series);

/// Entry point of the sbc command-line tool.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace sbc

#endif
