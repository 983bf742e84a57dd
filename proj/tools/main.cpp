#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "kslab/experiment.hpp"
#include "kslab/io.hpp"

namespace fs = std::filesystem;
using namespace kslab;

namespace {

ExperimentConfig load_config(const std::string& path) {
    if (!fs::exists(path)) throw std::invalid_argument("config file not found: " + path);
    return ExperimentConfig::from_file(path);
}

Matrix cli_nodes(const std::string& nodes_csv, double grid_a, double grid_b, int grid_n) {
    if (!nodes_csv.empty()) return read_nodes_csv(nodes_csv);
    if (grid_n < 1) throw std::invalid_argument("kernel: need --nodes-csv or a --grid-n >= 1");
    Matrix nodes(1, grid_n + 1);
    for (int i = 0; i <= grid_n; ++i) nodes(0, i) = grid_a + i * (grid_b - grid_a) / grid_n;
    return nodes;
}

int cmd_train(const std::string& config_path, long long seed_flag, const std::string& out_dir) {
    ExperimentConfig config = load_config(config_path);
    const std::uint64_t seed =
        seed_flag >= 0 ? static_cast<std::uint64_t>(seed_flag)
                       : (config.seeds.empty() ? 0 : config.seeds.front());
    config.seeds = {seed};
    config.kernels = {"nn"};
    config.run_bounds = false;
    const std::vector<RunRecord> records = run_experiment(config);
    if (records.front().diverged) {
        std::cerr << "training diverged: " << records.front().note << "\n";
        return 2;
    }
    fs::create_directories(out_dir);
    const std::string ckpt = (fs::path(out_dir) / "checkpoint.json").string();
    save_mlp(records.front().final_net, ckpt);
    write_results_csv((fs::path(out_dir) / "train_history.csv").string(), records);
    std::cout << "wrote " << ckpt << " (epochs run: " << records.front().epochs_run << ")\n";
    return 0;
}

int cmd_kernel(const std::string& checkpoint, const std::string& kind_name,
               const std::string& algorithm_name, const std::string& nodes_csv, double grid_a,
               double grid_b, int grid_n, bool features, const std::string& out_dir) {
    if (!fs::exists(checkpoint)) throw std::invalid_argument("checkpoint not found: " + checkpoint);
    const Mlp net = load_mlp(checkpoint);
    const Matrix nodes = cli_nodes(nodes_csv, grid_a, grid_b, grid_n);
    if (nodes.rows() != net.input_dim())
        throw std::invalid_argument("node dimension does not match the network input width");
    fs::create_directories(out_dir);
    if (features) {
        const std::string path = (fs::path(out_dir) / "features.csv").string();
        write_feature_csv(path, ck_features(net, nodes));
        std::cout << "wrote " << path << "\n";
        return 0;
    }
    const KernelKind kind = kernel_kind_from_string(kind_name);
    const NtkAlgorithm algorithm = ntk_algorithm_from_string(algorithm_name);
    const KernelGram gram = kernel_gram(net, kind, nodes, algorithm, default_contraction(net));
    const std::string path = (fs::path(out_dir) / (kind_name + "_gram.csv")).string();
    write_gram_csv(path, gram.H);
    std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_regress(const std::string& config_path, const std::string& checkpoint,
                const std::string& out_dir) {
    const ExperimentConfig config = load_config(config_path);
    if (config.task != TaskKind::Regression)
        throw std::invalid_argument("regress: config task is not regression");
    if (!fs::exists(checkpoint)) throw std::invalid_argument("checkpoint not found: " + checkpoint);
    const Mlp net = load_mlp(checkpoint);
    const RegressionTarget& target = regression_target(config.target);
    const Grid1DPair pair = make_grid_1d(config.a, config.b, config.n_train, config.n_test);
    const Vector y_train = sample_1d(target.f, pair.train.nodes);
    const Vector y_test = sample_1d(target.f, pair.test.nodes);
    fs::create_directories(out_dir);

    auto emit = [&](const std::string& method, const RegressionFit& fit) {
        const Vector pred_train = predict(fit, net, pair.train.nodes);
        const Vector pred_test = predict(fit, net, pair.test.nodes);
        std::ofstream csv(fs::path(out_dir) / ("residuals_" + method + ".csv"));
        csv << "node,target,prediction,residual\n";
        for (int i = 0; i < pair.train.size(); ++i)
            csv << format_double(pair.train.nodes(0, i)) << "," << format_double(y_train[i]) << ","
                << format_double(pred_train[i]) << "," << format_double(y_train[i] - pred_train[i])
                << "\n";
        std::ofstream fit_json(fs::path(out_dir) / ("fit_" + method + ".json"));
        fit_json << fit_to_json(fit).dump(2) << "\n";
        std::cout << method << ": train error " << weighted_norm(y_train - pred_train, pair.train)
                  << ", test error " << weighted_norm(y_test - pred_test, pair.test) << "\n";
    };

    for (const auto& method : config.kernels) {
        if (method == "nn") continue;
        if (method == "ntk")
            emit("ntk", fit_kernel_form(ntk_gram(net, pair.train.nodes), pair.train, y_train,
                                        config.rcond));
        else if (method == "ck")
            emit("ck", fit_kernel_form(ck_gram(net, pair.train.nodes), pair.train, y_train,
                                       config.rcond));
        else if (method == "ckj")
            emit("ckj", fit_feature_form(ck_features(net, pair.train.nodes), KernelKind::CK,
                                         pair.train, y_train, config.rcond));
    }
    return 0;
}

int cmd_classify(const std::string& config_path, const std::string& checkpoint,
                 const std::string& out_dir) {
    const ExperimentConfig config = load_config(config_path);
    if (config.task != TaskKind::Classification)
        throw std::invalid_argument("classify: config task is not classification");
    if (!fs::exists(checkpoint)) throw std::invalid_argument("checkpoint not found: " + checkpoint);
    const Mlp net = load_mlp(checkpoint);
    const ClassificationTarget& target = classification_target(config.target);
    const Grid2DPair pair = make_grid_2d(config.a1, config.b1, config.a2, config.b2, config.n1,
                                         config.n2, config.m1, config.m2);
    const LabelField labels = label_field(target.separator, pair);
    fs::create_directories(out_dir);

    auto emit = [&](const std::string& method, KernelKind kind) {
        KernelGram gram = kernel_gram(net, kind, pair.train.nodes, NtkAlgorithm::Auto,
                                      default_contraction(net));
        LogisticFit fit = newton_fit(gram, labels.train_labels);
        fit.contraction = default_contraction(net);
        std::ofstream fit_json(fs::path(out_dir) / ("fit_" + method + ".json"));
        fit_json << logistic_fit_to_json(fit).dump(2) << "\n";
        auto write_stage = [&](const std::string& stage, const WeightedGrid& grid,
                               const IntVector& stage_labels) {
            const PsiValues values = psi_values(fit, net, grid.nodes, stage_labels);
            std::ofstream csv(fs::path(out_dir) / ("decisions_" + stage + "_" + method + ".csv"));
            csv << "node_x1,node_x2,label,psi,p,predicted\n";
            for (int i = 0; i < grid.size(); ++i) {
                const double p = 1.0 / (1.0 + std::exp(-values.psi[i]));
                csv << format_double(grid.nodes(0, i)) << "," << format_double(grid.nodes(1, i))
                    << "," << stage_labels[i] << "," << format_double(values.psi[i]) << ","
                    << format_double(p) << "," << (p > 0.5 ? 1 : 0) << "\n";
            }
            Vector probs(grid.size());
            for (int i = 0; i < grid.size(); ++i)
                probs[i] = 1.0 / (1.0 + std::exp(-values.psi[i]));
            std::cout << method << " " << stage << ": cross-entropy "
                      << logistic_loss_from_psi_hat(values.psi_hat) << ", accuracy "
                      << classification_accuracy(probs, stage_labels) << "\n";
        };
        write_stage("train", pair.train, labels.train_labels);
        write_stage("test", pair.test, labels.test_labels);
    };
    for (const auto& method : config.kernels) {
        if (method == "nn") continue;
        emit(method, kernel_kind_from_string(method));
    }
    return 0;
}

int cmd_verify_bounds(const std::string& config_path, const std::string& run_dir,
                      const std::string& out_dir) {
    const ExperimentConfig config = load_config(config_path);
    if (!fs::exists(run_dir)) throw std::invalid_argument("run directory not found: " + run_dir);
    std::vector<RunRecord> records;
    for (const auto seed : config.seeds) {
        const fs::path ckpt = fs::path(run_dir) / ("checkpoint_seed" + std::to_string(seed) + ".json");
        if (!fs::exists(ckpt)) continue;  // diverged seeds leave no checkpoint
        RunRecord record;
        record.seed = seed;
        record.final_net = load_mlp(ckpt.string());
        record.bounds = bounds_for_net(config, record.final_net);
        records.push_back(std::move(record));
    }
    if (records.empty())
        throw std::invalid_argument("no per-seed checkpoints found under " + run_dir);

    const std::string dir = out_dir.empty() ? run_dir : out_dir;
    fs::create_directories(dir);
    write_bounds_csv((fs::path(dir) / "bounds.csv").string(), records);

    std::string table;
    int violations = 0;
    for (const auto& record : records) {
        table += "seed " + std::to_string(record.seed) + "\n";
        table += bound_table(record.bounds);
        for (const auto& bound : record.bounds)
            if (unexplained_violation(bound)) ++violations;
    }
    table += "unexplained violations: " + std::to_string(violations) + "\n";
    write_text_file((fs::path(dir) / "bounds.txt").string(), table);
    std::cout << table;
    return violations == 0 ? 0 : 2;
}

int cmd_experiment(const std::string& config_path, const std::string& out_dir,
                   long long seed_flag) {
    ExperimentConfig config = load_config(config_path);
    if (seed_flag >= 0) config.seeds = {static_cast<std::uint64_t>(seed_flag)};
    const std::vector<RunRecord> records = run_experiment(config);
    write_experiment_outputs(config, records, out_dir);
    long diverged = 0;
    for (const auto& record : records)
        if (record.diverged) ++diverged;
    std::cout << "completed " << records.size() << " seeds (" << diverged << " diverged); outputs in "
              << out_dir << "\n";
    return diverged == static_cast<long>(records.size()) && !records.empty() ? 2 : 0;
}

int cmd_plot(const std::string& in_path, const std::string& out_path, const std::string& metric,
             const std::string& stage, const std::string& x_axis, bool log_y,
             const std::string& title) {
    if (!fs::exists(in_path)) throw std::invalid_argument("results csv not found: " + in_path);
    const std::vector<MetricRow> rows = read_results_csv(in_path);

    std::vector<std::string> methods;
    for (const auto& row : rows)
        if (row.stage == stage && row.metric == metric &&
            std::find(methods.begin(), methods.end(), row.method) == methods.end())
            methods.push_back(row.method);
    if (methods.empty())
        throw std::invalid_argument("no rows match stage=" + stage + " metric=" + metric);

    std::vector<PlotSeries> series;
    for (const auto& method : methods) {
        PlotSeries s;
        s.label = method;
        if (x_axis == "seed") {
            // final value per seed, scattered against the seed index
            std::map<std::uint64_t, std::pair<int, double>> finals;
            for (const auto& row : rows) {
                if (row.method != method || row.stage != stage || row.metric != metric) continue;
                auto& slot = finals.try_emplace(row.seed, -1, 0.0).first->second;
                if (row.epoch > slot.first) slot = {row.epoch, row.value};
            }
            s.scatter = true;
            for (const auto& [seed, slot] : finals) {
                s.x.push_back(static_cast<double>(seed));
                s.y.push_back(slot.second);
            }
        } else {
            // median across seeds per epoch
            std::map<int, std::vector<double>> by_epoch;
            for (const auto& row : rows)
                if (row.method == method && row.stage == stage && row.metric == metric)
                    by_epoch[row.epoch].push_back(row.value);
            for (auto& [epoch, values] : by_epoch) {
                s.x.push_back(epoch);
                s.y.push_back(quantile(values, 0.5));
            }
        }
        series.push_back(std::move(s));
    }

    PlotOptions options;
    options.title = title.empty() ? (metric + " (" + stage + ")") : title;
    options.x_label = x_axis;
    options.y_label = metric;
    options.log_y = log_y;
    write_svg_plot(out_path, series, options);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kslab: train small dense networks, extract their tangent and last-layer "
                 "kernels, fit kernel surrogates, and check train/test loss bounds"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    long long seed_flag = -1;
    std::string out_dir = ".";
    app.add_option("--config", config_path, "experiment config (json)");
    app.add_option("--seed", seed_flag, "override the config seed list with one seed");
    app.add_option("--out-dir", out_dir, "output directory");

    auto* train = app.add_subcommand("train", "train a network and emit a checkpoint");

    auto* kernel = app.add_subcommand("kernel", "export a Gram or feature matrix from a checkpoint");
    std::string checkpoint, kind_name = "ntk", algorithm_name = "auto", nodes_csv;
    double grid_a = -1.0, grid_b = 1.0;
    int grid_n = 0;
    bool features = false;
    kernel->add_option("--checkpoint", checkpoint, "model checkpoint json")->required();
    kernel->add_option("--kind", kind_name, "ntk|ck|e")
        ->check(CLI::IsMember({"ntk", "ck", "e"}));
    kernel->add_option("--algorithm", algorithm_name, "backward|forward|auto")
        ->check(CLI::IsMember({"backward", "forward", "auto"}));
    kernel->add_option("--nodes-csv", nodes_csv, "node coordinates, one node per row");
    kernel->add_option("--grid-a", grid_a, "1d grid left endpoint");
    kernel->add_option("--grid-b", grid_b, "1d grid right endpoint");
    kernel->add_option("--grid-n", grid_n, "1d grid interval count");
    kernel->add_flag("--features", features, "export last-layer features instead of a Gram");

    auto* regress = app.add_subcommand("regress", "fit kernel regressors from a checkpoint");
    std::string regress_checkpoint;
    regress->add_option("--checkpoint", regress_checkpoint, "model checkpoint json")->required();

    auto* classify = app.add_subcommand("classify", "fit kernel logistic classifiers from a checkpoint");
    std::string classify_checkpoint;
    classify->add_option("--checkpoint", classify_checkpoint, "model checkpoint json")->required();

    auto* verify = app.add_subcommand("verify-bounds", "recheck the loss bounds for a finished run");
    std::string run_dir;
    verify->add_option("--run-dir", run_dir, "directory with per-seed checkpoints")->required();
    std::string verify_out;
    verify->add_option("--bounds-out", verify_out, "where to write bounds.csv/bounds.txt (default: run dir)");

    auto* experiment = app.add_subcommand("experiment", "run a full multi-seed study");

    auto* plot = app.add_subcommand("plot", "render a results csv as a deterministic svg");
    std::string plot_in, plot_out = "plot.svg", plot_metric = "l2_error", plot_stage = "test";
    std::string plot_x = "epoch", plot_title;
    bool plot_logy = false;
    plot->add_option("--in", plot_in, "results csv")->required();
    plot->add_option("--out", plot_out, "svg path");
    plot->add_option("--metric", plot_metric, "metric column to plot");
    plot->add_option("--stage", plot_stage, "train|test")->check(CLI::IsMember({"train", "test"}));
    plot->add_option("--x", plot_x, "epoch|seed")->check(CLI::IsMember({"epoch", "seed"}));
    plot->add_flag("--logy", plot_logy, "log-scale y axis");
    plot->add_option("--title", plot_title, "plot title");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 1;
    }

    try {
        if (train->parsed()) return cmd_train(config_path, seed_flag, out_dir);
        if (kernel->parsed())
            return cmd_kernel(checkpoint, kind_name, algorithm_name, nodes_csv, grid_a, grid_b,
                              grid_n, features, out_dir);
        if (regress->parsed()) return cmd_regress(config_path, regress_checkpoint, out_dir);
        if (classify->parsed()) return cmd_classify(config_path, classify_checkpoint, out_dir);
        if (verify->parsed()) return cmd_verify_bounds(config_path, run_dir, verify_out);
        if (experiment->parsed()) return cmd_experiment(config_path, out_dir, seed_flag);
        if (plot->parsed())
            return cmd_plot(plot_in, plot_out, plot_metric, plot_stage, plot_x, plot_logy,
                            plot_title);
    } catch (const std::invalid_argument& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const std::runtime_error& err) {
        std::cerr << "numerical failure: " << err.what() << "\n";
        return 2;
    }
    return 1;
}
