#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kslab/bounds.hpp"
#include "kslab/targets.hpp"

namespace kslab {

enum class TaskKind { Regression, Classification };

/// Everything one study needs: task, target, grids, network, optimizer,
/// seeds, which methods to evaluate, and at which epochs to extract
/// kernels. Defaults reproduce the reference desk-scale setups
/// (regression: 200/600 grid, width 128, depth 3, 2400 epochs, lr 1e-3;
/// classification: 11x7 / 22x21 grids, width 128, depth 2, lr 1e-5, early
/// stop at 0.85 training accuracy or 4000 epochs).
struct ExperimentConfig {
    TaskKind task = TaskKind::Regression;
    std::string target = "f2";

    // 1D grids (regression)
    double a = -1.0, b = 1.0;
    int n_train = 200, n_test = 600;

    // 2D grids (classification)
    double a1 = -1.0, b1 = 1.0, a2 = -1.0, b2 = 1.0;
    int n1 = 11, n2 = 7, m1 = 22, m2 = 21;

    std::vector<int> dims;
    Activation activation = Activation::Tanh;
    TrainConfig train;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<std::string> kernels;  // subset of {nn, ntk, ck, ckj}
    std::vector<int> checkpoints;      // kernel-extraction epochs; default every 10%
    double rcond = 1e-12;
    bool run_bounds = true;
    bool ckj_ortho = false;  // evaluate CKJ through the orthonormal basis route

    void validate() const;
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::string& path);
};

struct MetricRow {
    std::uint64_t seed = 0;
    std::string method;  // nn | ntk | ck | ckj
    std::string stage;   // train | test
    int epoch = 0;
    std::string metric;  // l2_error | cross_entropy | accuracy
    double value = 0.0;
};

struct RunRecord {
    std::uint64_t seed = 0;
    std::vector<MetricRow> rows;
    std::vector<BoundReport> bounds;
    Mlp final_net;
    int epochs_run = 0;
    bool stopped_early = false;
    bool diverged = false;
    bool kernel_fits_converged = true;  // classification Newton solves
    std::string note;
    double wall_seconds = 0.0;
};

// Seeds run concurrently (KS_THREADS caps the worker count); each seed's
// pipeline is deterministic, so results do not depend on the thread count.
std::vector<RunRecord> run_regression(const ExperimentConfig& config);
std::vector<RunRecord> run_classification(const ExperimentConfig& config);
std::vector<RunRecord> run_experiment(const ExperimentConfig& config);

/// Fits kernels from a checkpoint and evaluates the full bound suite for
/// the configured task; shared by the runner and `verify-bounds`.
std::vector<BoundReport> bounds_for_net(const ExperimentConfig& config, const Mlp& net);

void write_results_csv(const std::string& path, const std::vector<RunRecord>& records);
void write_bounds_csv(const std::string& path, const std::vector<RunRecord>& records);
std::vector<MetricRow> read_results_csv(const std::string& path);

struct Aggregate {
    std::string method, stage, metric;
    double median = 0.0, q25 = 0.0, q75 = 0.0;
    int count = 0;
};

/// Linear-interpolation quantile of the sorted values.
double quantile(std::vector<double> values, double p);

/// Per-(method, stage, metric) summary over seeds of the value at each
/// seed's last recorded epoch; diverged seeds are skipped.
std::vector<Aggregate> aggregate_final(const std::vector<RunRecord>& records);
void write_aggregates_csv(const std::string& path, const std::vector<Aggregate>& aggregates);

/// results.csv, bounds.csv, aggregates.csv, summary.json and per-seed
/// checkpoints under out_dir.
void write_experiment_outputs(const ExperimentConfig& config,
                              const std::vector<RunRecord>& records, const std::string& out_dir);

int thread_budget(std::size_t jobs);  // KS_THREADS-capped worker count

}  // namespace kslab
