#include "kslab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "kslab/io.hpp"

namespace kslab {

namespace {

const std::vector<std::string> kRegressionMethods = {"nn", "ntk", "ck", "ckj"};
const std::vector<std::string> kClassificationMethods = {"nn", "ntk", "ck"};

std::vector<int> default_checkpoints(int epochs) {
    std::vector<int> out;
    for (int k = 0; k <= 10; ++k) {
        const int epoch = static_cast<int>(static_cast<long>(epochs) * k / 10);
        if (out.empty() || out.back() != epoch) out.push_back(epoch);
    }
    return out;
}

}  // namespace

void ExperimentConfig::validate() const {
    train.validate();
    if (dims.size() < 3) throw std::invalid_argument("config: dims must list at least three widths");
    const auto& allowed =
        task == TaskKind::Regression ? kRegressionMethods : kClassificationMethods;
    for (const auto& k : kernels)
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw std::invalid_argument("config: method '" + k + "' not available for this task");
    if (task == TaskKind::Regression) {
        if (!is_regression_target(target))
            throw std::invalid_argument("config: unknown regression target " + target);
        if (dims.front() != 1 || dims.back() != 1)
            throw std::invalid_argument("config: regression networks map 1 input to 1 output");
    } else {
        if (!is_classification_target(target))
            throw std::invalid_argument("config: unknown classification target " + target);
        if (dims.front() != 2 || dims.back() != 2)
            throw std::invalid_argument("config: classifiers map 2 inputs to 2 outputs");
    }
    if (!(rcond > 0.0 && rcond < 1.0)) throw std::invalid_argument("config: rcond must lie in (0,1)");
    for (int c : checkpoints)
        if (c < 0 || c > train.epochs)
            throw std::invalid_argument("config: checkpoint epoch out of range");
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["task"] = task == TaskKind::Regression ? "regression" : "classification";
    j["target"] = target;
    if (task == TaskKind::Regression) {
        j["grid"] = {{"a", a}, {"b", b}, {"n_train", n_train}, {"n_test", n_test}};
    } else {
        j["grid"] = {{"a1", a1}, {"b1", b1}, {"a2", a2}, {"b2", b2},
                     {"n1", n1}, {"n2", n2}, {"m1", m1}, {"m2", m2}};
    }
    j["dims"] = dims;
    j["activation"] = to_string(activation);
    j["train"] = {{"learning_rate", train.learning_rate},
                  {"epochs", train.epochs},
                  {"beta1", train.adam_beta1},
                  {"beta2", train.adam_beta2},
                  {"eps", train.adam_eps}};
    if (train.stop_accuracy) j["train"]["stop_accuracy"] = *train.stop_accuracy;
    j["seeds"] = seeds;
    j["kernels"] = kernels;
    j["checkpoints"] = checkpoints;
    j["rcond"] = rcond;
    j["run_bounds"] = run_bounds;
    j["ckj_ortho"] = ckj_ortho;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig config;
    const std::string task = j.value("task", "regression");
    if (task == "regression") {
        config.task = TaskKind::Regression;
    } else if (task == "classification") {
        config.task = TaskKind::Classification;
    } else {
        throw std::invalid_argument("config: task must be regression or classification");
    }

    // Task-dependent defaults first, then explicit keys override.
    if (config.task == TaskKind::Regression) {
        config.target = "f2";
        config.dims = {1, 128, 128, 128, 1};
        config.train.learning_rate = 1e-3;
        config.train.epochs = 2400;
        config.train.loss = LossKind::WeightedMse;
        config.kernels = kRegressionMethods;
    } else {
        config.target = "F1";
        config.dims = {2, 128, 128, 2};
        config.train.learning_rate = 1e-5;
        config.train.epochs = 4000;
        config.train.loss = LossKind::CrossEntropy;
        config.train.stop_accuracy = 0.85;
        config.kernels = kClassificationMethods;
    }

    config.target = j.value("target", config.target);
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        config.a = g.value("a", config.a);
        config.b = g.value("b", config.b);
        config.n_train = g.value("n_train", config.n_train);
        config.n_test = g.value("n_test", config.n_test);
        config.a1 = g.value("a1", config.a1);
        config.b1 = g.value("b1", config.b1);
        config.a2 = g.value("a2", config.a2);
        config.b2 = g.value("b2", config.b2);
        config.n1 = g.value("n1", config.n1);
        config.n2 = g.value("n2", config.n2);
        config.m1 = g.value("m1", config.m1);
        config.m2 = g.value("m2", config.m2);
    }
    if (j.contains("dims")) {
        config.dims = j.at("dims").get<std::vector<int>>();
    } else if (j.contains("width") || j.contains("hidden_layers")) {
        const int width = j.value("width", 128);
        const int hidden = j.value("hidden_layers", config.task == TaskKind::Regression ? 3 : 2);
        const int io = config.task == TaskKind::Regression ? 1 : 2;
        config.dims.assign(1, io);
        config.dims.insert(config.dims.end(), hidden, width);
        config.dims.push_back(config.task == TaskKind::Regression ? 1 : 2);
    }
    config.activation = activation_from_string(j.value("activation", "tanh"));
    if (j.contains("train")) {
        const auto& t = j.at("train");
        config.train.learning_rate = t.value("learning_rate", config.train.learning_rate);
        config.train.epochs = t.value("epochs", config.train.epochs);
        config.train.adam_beta1 = t.value("beta1", config.train.adam_beta1);
        config.train.adam_beta2 = t.value("beta2", config.train.adam_beta2);
        config.train.adam_eps = t.value("eps", config.train.adam_eps);
        if (t.contains("stop_accuracy")) config.train.stop_accuracy = t.at("stop_accuracy").get<double>();
    }
    if (j.contains("seeds")) config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("kernels")) config.kernels = j.at("kernels").get<std::vector<std::string>>();
    config.checkpoints = j.contains("checkpoints") ? j.at("checkpoints").get<std::vector<int>>()
                                                   : default_checkpoints(config.train.epochs);
    config.rcond = j.value("rcond", config.rcond);
    config.run_bounds = j.value("run_bounds", config.run_bounds);
    config.ckj_ortho = j.value("ckj_ortho", config.ckj_ortho);
    config.validate();
    return config;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

int thread_budget(std::size_t jobs) {
    unsigned budget = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("KS_THREADS")) {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed >= 1) budget = static_cast<unsigned>(parsed);
    }
    return static_cast<int>(std::min<std::size_t>(budget, std::max<std::size_t>(jobs, 1)));
}

namespace {

bool wants(const ExperimentConfig& config, const std::string& method) {
    return std::find(config.kernels.begin(), config.kernels.end(), method) !=
           config.kernels.end();
}

void push_row(RunRecord& record, const std::string& method, const std::string& stage, int epoch,
              const std::string& metric, double value) {
    record.rows.push_back({record.seed, method, stage, epoch, metric, value});
}

std::vector<std::pair<int, Mlp>> collect_checkpoints(const ExperimentConfig& config,
                                                     const Mlp& initial, const TrainData& data,
                                                     RunRecord& record) {
    std::vector<std::pair<int, Mlp>> nets;
    const TrainResult trained = train_adam(
        initial, data, config.train, config.checkpoints,
        [&](int epoch, const Mlp& net) { nets.emplace_back(epoch, net); });
    record.epochs_run = trained.epochs_run;
    record.stopped_early = trained.stopped_early;
    // The final network is a checkpoint whether or not its epoch was listed
    // (early stopping can skip the tail of the list).
    if (nets.empty() || nets.back().first != trained.epochs_run)
        nets.emplace_back(trained.epochs_run, trained.net);
    record.final_net = trained.net;
    return nets;
}

void run_regression_seed(const ExperimentConfig& config, RunRecord& record) {
    const auto start = std::chrono::steady_clock::now();
    const RegressionTarget& target = regression_target(config.target);
    const Grid1DPair pair = make_grid_1d(config.a, config.b, config.n_train, config.n_test);
    const Vector y_train = sample_1d(target.f, pair.train.nodes);
    const Vector y_test = sample_1d(target.f, pair.test.nodes);

    TrainData data;
    data.nodes = pair.train.nodes;
    data.weights = pair.train.weights;
    data.targets = y_train;

    TrainConfig train_config = config.train;
    train_config.seed = record.seed;
    const Mlp initial = init_mlp(config.dims, config.activation, record.seed);

    std::vector<std::pair<int, Mlp>> nets;
    try {
        ExperimentConfig seeded = config;
        seeded.train = train_config;
        nets = collect_checkpoints(seeded, initial, data, record);
    } catch (const std::runtime_error& err) {
        record.diverged = true;
        record.note = err.what();
        return;
    }

    for (const auto& [epoch, net] : nets) {
        if (wants(config, "nn")) {
            const Vector pred_train = forward(net, pair.train.nodes).output().row(0).transpose();
            const Vector pred_test = forward(net, pair.test.nodes).output().row(0).transpose();
            push_row(record, "nn", "train", epoch, "l2_error",
                     weighted_norm(y_train - pred_train, pair.train));
            push_row(record, "nn", "test", epoch, "l2_error",
                     weighted_norm(y_test - pred_test, pair.test));
        }
        auto record_fit = [&](const std::string& method, const RegressionFit& fit) {
            push_row(record, method, "train", epoch, "l2_error",
                     weighted_norm(y_train - fit.train_predictions, pair.train));
            push_row(record, method, "test", epoch, "l2_error",
                     weighted_norm(y_test - predict(fit, net, pair.test.nodes), pair.test));
        };
        if (wants(config, "ntk"))
            record_fit("ntk", fit_kernel_form(ntk_gram(net, pair.train.nodes), pair.train,
                                              y_train, config.rcond));
        if (wants(config, "ck"))
            record_fit("ck", fit_kernel_form(ck_gram(net, pair.train.nodes), pair.train, y_train,
                                             config.rcond));
        if (wants(config, "ckj")) {
            const Matrix phi = ck_features(net, pair.train.nodes);
            if (config.ckj_ortho) {
                auto basis = std::make_shared<OrthoBasis>(
                    ortho_basis_from_features(phi, KernelKind::CK, pair.train, config.rcond));
                record_fit("ckj", fit_ortho_form(std::move(basis), y_train));
            } else {
                record_fit("ckj",
                           fit_feature_form(phi, KernelKind::CK, pair.train, y_train, config.rcond));
            }
        }
    }

    if (config.run_bounds && wants(config, "ntk") && wants(config, "ck"))
        record.bounds = bounds_for_net(config, record.final_net);

    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void run_classification_seed(const ExperimentConfig& config, RunRecord& record) {
    const auto start = std::chrono::steady_clock::now();
    const ClassificationTarget& target = classification_target(config.target);
    const Grid2DPair pair =
        make_grid_2d(config.a1, config.b1, config.a2, config.b2, config.n1, config.n2, config.m1,
                     config.m2);
    const LabelField labels = label_field(target.separator, pair);

    TrainData data;
    data.nodes = pair.train.nodes;
    data.labels = labels.train_labels;

    TrainConfig train_config = config.train;
    train_config.seed = record.seed;
    const Mlp initial = init_mlp(config.dims, config.activation, record.seed);

    std::vector<std::pair<int, Mlp>> nets;
    try {
        ExperimentConfig seeded = config;
        seeded.train = train_config;
        nets = collect_checkpoints(seeded, initial, data, record);
    } catch (const std::runtime_error& err) {
        record.diverged = true;
        record.note = err.what();
        return;
    }

    LogisticFit final_ntk, final_ck;
    for (const auto& [epoch, net] : nets) {
        const bool final_epoch = epoch == nets.back().first;
        if (wants(config, "nn")) {
            push_row(record, "nn", "train", epoch, "cross_entropy",
                     cross_entropy(net, pair.train.nodes, labels.train_labels));
            push_row(record, "nn", "test", epoch, "cross_entropy",
                     cross_entropy(net, pair.test.nodes, labels.test_labels));
            push_row(record, "nn", "train", epoch, "accuracy",
                     nn_accuracy(net, pair.train.nodes, labels.train_labels));
            push_row(record, "nn", "test", epoch, "accuracy",
                     nn_accuracy(net, pair.test.nodes, labels.test_labels));
        }
        auto record_kernel = [&](const std::string& method, KernelKind kind) {
            KernelGram gram = kernel_gram(net, kind, pair.train.nodes, NtkAlgorithm::Auto,
                                          default_contraction(net));
            LogisticFit fit = newton_fit(gram, labels.train_labels);
            fit.contraction = default_contraction(net);
            if (!fit.converged) {
                // A capped last-layer solve only overestimates its own
                // minimum, so cross-kernel comparisons stay valid as long as
                // the tangent-kernel solve converged.
                if (kind == KernelKind::NTK) record.kernel_fits_converged = false;
                record.note += method + " newton solve stopped by " + fit.stop_reason +
                               " at epoch " + std::to_string(epoch) + "; ";
            }
            const Vector psi_train = decision_values_from_rows(fit, gram.H);
            Vector psi_hat_train(psi_train.size());
            for (Eigen::Index i = 0; i < psi_train.size(); ++i)
                psi_hat_train[i] = (1.0 - 2.0 * labels.train_labels[i]) * psi_train[i];
            push_row(record, method, "train", epoch, "cross_entropy",
                     logistic_loss_from_psi_hat(psi_hat_train));
            const PsiValues test = psi_values(fit, net, pair.test.nodes, labels.test_labels);
            push_row(record, method, "test", epoch, "cross_entropy",
                     logistic_loss_from_psi_hat(test.psi_hat));
            Vector prob_train(psi_train.size());
            for (Eigen::Index i = 0; i < psi_train.size(); ++i)
                prob_train[i] = 1.0 / (1.0 + std::exp(-psi_train[i]));
            Vector prob_test(test.psi.size());
            for (Eigen::Index i = 0; i < test.psi.size(); ++i)
                prob_test[i] = 1.0 / (1.0 + std::exp(-test.psi[i]));
            push_row(record, method, "train", epoch, "accuracy",
                     classification_accuracy(prob_train, labels.train_labels));
            push_row(record, method, "test", epoch, "accuracy",
                     classification_accuracy(prob_test, labels.test_labels));
            if (final_epoch) (kind == KernelKind::NTK ? final_ntk : final_ck) = fit;
        };
        if (wants(config, "ntk")) record_kernel("ntk", KernelKind::NTK);
        if (wants(config, "ck")) record_kernel("ck", KernelKind::CK);
    }

    if (config.run_bounds && wants(config, "ntk") && wants(config, "ck"))
        record.bounds =
            logistic_bound_suite(record.final_net, final_ntk, final_ck, labels, pair);

    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<RunRecord> run_seeds(const ExperimentConfig& config,
                                 void (*runner)(const ExperimentConfig&, RunRecord&)) {
    config.validate();
    std::vector<RunRecord> records(config.seeds.size());
    for (std::size_t i = 0; i < config.seeds.size(); ++i) records[i].seed = config.seeds[i];

    const int workers = thread_budget(config.seeds.size());
    if (workers <= 1) {
        for (auto& record : records) runner(config, record);
        return records;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < records.size(); i = next.fetch_add(1))
                runner(config, records[i]);
        });
    for (auto& t : pool) t.join();
    return records;
}

}  // namespace

std::vector<RunRecord> run_regression(const ExperimentConfig& config) {
    if (config.task != TaskKind::Regression)
        throw std::invalid_argument("run_regression: config task is not regression");
    return run_seeds(config, &run_regression_seed);
}

std::vector<RunRecord> run_classification(const ExperimentConfig& config) {
    if (config.task != TaskKind::Classification)
        throw std::invalid_argument("run_classification: config task is not classification");
    return run_seeds(config, &run_classification_seed);
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
    return config.task == TaskKind::Regression ? run_regression(config)
                                               : run_classification(config);
}

std::vector<BoundReport> bounds_for_net(const ExperimentConfig& config, const Mlp& net) {
    if (config.task == TaskKind::Regression) {
        const RegressionTarget& target = regression_target(config.target);
        const Grid1DPair pair = make_grid_1d(config.a, config.b, config.n_train, config.n_test);
        const Vector y_train = sample_1d(target.f, pair.train.nodes);
        const KernelGram ntk = ntk_gram(net, pair.train.nodes);
        const RegressionFit ntk_fit = fit_kernel_form(ntk, pair.train, y_train, config.rcond);
        const RegressionFit ck_fit =
            fit_kernel_form(ck_gram(net, pair.train.nodes), pair.train, y_train, config.rcond);
        return regression_bound_suite(target.f, net, ntk_fit, ck_fit, ntk, pair);
    }
    const ClassificationTarget& target = classification_target(config.target);
    const Grid2DPair pair = make_grid_2d(config.a1, config.b1, config.a2, config.b2, config.n1,
                                         config.n2, config.m1, config.m2);
    const LabelField labels = label_field(target.separator, pair);
    auto fit_kernel = [&](KernelKind kind) {
        KernelGram gram = kernel_gram(net, kind, pair.train.nodes, NtkAlgorithm::Auto,
                                      default_contraction(net));
        LogisticFit fit = newton_fit(gram, labels.train_labels);
        fit.contraction = default_contraction(net);
        return fit;
    };
    return logistic_bound_suite(net, fit_kernel(KernelKind::NTK), fit_kernel(KernelKind::CK),
                                labels, pair);
}

namespace {

std::string csv_quote(const std::string& raw) {
    std::string out = "\"";
    for (char c : raw) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

void write_results_csv(const std::string& path, const std::vector<RunRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "# kslab results v1\n";
    out << "seed,method,stage,epoch,metric,value\n";
    for (const auto& record : records)
        for (const auto& row : record.rows)
            out << row.seed << "," << row.method << "," << row.stage << "," << row.epoch << ","
                << row.metric << "," << format_double(row.value) << "\n";
}

void write_bounds_csv(const std::string& path, const std::vector<RunRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "# kslab bounds v1\n";
    out << "seed,bound_id,lhs,rhs,satisfied,hypothesis_ok,constants_json\n";
    for (const auto& record : records)
        for (const auto& bound : record.bounds) {
            nlohmann::json constants(bound.constants);
            out << record.seed << "," << bound.id << "," << format_double(bound.lhs) << ","
                << format_double(bound.rhs) << "," << (bound.satisfied ? 1 : 0) << ","
                << (bound.hypothesis_met ? 1 : 0) << "," << csv_quote(constants.dump()) << "\n";
        }
}

std::vector<MetricRow> read_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open results csv " + path);
    std::vector<MetricRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("seed,", 0) == 0) continue;
        std::stringstream ss(line);
        std::string cell;
        MetricRow row;
        std::getline(ss, cell, ',');
        row.seed = std::strtoull(cell.c_str(), nullptr, 10);
        std::getline(ss, row.method, ',');
        std::getline(ss, row.stage, ',');
        std::getline(ss, cell, ',');
        row.epoch = static_cast<int>(std::strtol(cell.c_str(), nullptr, 10));
        std::getline(ss, row.metric, ',');
        std::getline(ss, cell, ',');
        row.value = std::strtod(cell.c_str(), nullptr);
        rows.push_back(std::move(row));
    }
    return rows;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile of empty sample");
    std::sort(values.begin(), values.end());
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto idx = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(idx);
    if (idx + 1 < values.size()) return values[idx] * (1.0 - frac) + values[idx + 1] * frac;
    return values.back();
}

std::vector<Aggregate> aggregate_final(const std::vector<RunRecord>& records) {
    // Preserve first-seen order of (method, stage, metric) triples.
    std::vector<std::tuple<std::string, std::string, std::string>> keys;
    for (const auto& record : records) {
        if (record.diverged) continue;
        for (const auto& row : record.rows) {
            auto key = std::make_tuple(row.method, row.stage, row.metric);
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
        }
    }
    std::vector<Aggregate> out;
    for (const auto& [method, stage, metric] : keys) {
        std::vector<double> values;
        for (const auto& record : records) {
            if (record.diverged) continue;
            int best_epoch = -1;
            double value = 0.0;
            for (const auto& row : record.rows)
                if (row.method == method && row.stage == stage && row.metric == metric &&
                    row.epoch > best_epoch) {
                    best_epoch = row.epoch;
                    value = row.value;
                }
            if (best_epoch >= 0) values.push_back(value);
        }
        if (values.empty()) continue;
        Aggregate agg;
        agg.method = method;
        agg.stage = stage;
        agg.metric = metric;
        agg.median = quantile(values, 0.5);
        agg.q25 = quantile(values, 0.25);
        agg.q75 = quantile(values, 0.75);
        agg.count = static_cast<int>(values.size());
        out.push_back(std::move(agg));
    }
    return out;
}

void write_aggregates_csv(const std::string& path, const std::vector<Aggregate>& aggregates) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "# kslab aggregates v1\n";
    out << "method,stage,metric,median,q25,q75,n\n";
    for (const auto& agg : aggregates)
        out << agg.method << "," << agg.stage << "," << agg.metric << ","
            << format_double(agg.median) << "," << format_double(agg.q25) << ","
            << format_double(agg.q75) << "," << agg.count << "\n";
}

void write_experiment_outputs(const ExperimentConfig& config,
                              const std::vector<RunRecord>& records, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_results_csv((dir / "results.csv").string(), records);
    write_bounds_csv((dir / "bounds.csv").string(), records);
    write_aggregates_csv((dir / "aggregates.csv").string(), aggregate_final(records));

    nlohmann::json summary;
    summary["config"] = config.to_json();
    nlohmann::json per_seed = nlohmann::json::array();
    for (const auto& record : records) {
        nlohmann::json s;
        s["seed"] = record.seed;
        s["epochs_run"] = record.epochs_run;
        s["stopped_early"] = record.stopped_early;
        s["diverged"] = record.diverged;
        s["kernel_fits_converged"] = record.kernel_fits_converged;
        s["wall_seconds"] = record.wall_seconds;
        if (!record.note.empty()) s["note"] = record.note;
        per_seed.push_back(std::move(s));
        if (!record.diverged)
            save_mlp(record.final_net,
                     (dir / ("checkpoint_seed" + std::to_string(record.seed) + ".json")).string());
    }
    summary["seeds"] = std::move(per_seed);
    std::ofstream out(dir / "summary.json");
    out << summary.dump(2) << "\n";
}

}  // namespace kslab
