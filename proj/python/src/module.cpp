#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kslab/experiment.hpp"
#include "kslab/io.hpp"

namespace py = pybind11;
using namespace kslab;

namespace {

Mlp checkpoint_from_string(const std::string& text) {
    return mlp_from_json(nlohmann::json::parse(text));
}

std::string checkpoint_to_string(const Mlp& net) { return mlp_to_json(net).dump(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Dense-network kernel surrogates: training, tangent/last-layer kernel "
              "extraction, kernel regression and logistic fits, and loss-bound checks";

    py::enum_<Activation>(m, "Activation")
        .value("tanh", Activation::Tanh)
        .value("relu", Activation::ReLU);

    py::enum_<NtkAlgorithm>(m, "NtkAlgorithm")
        .value("backward", NtkAlgorithm::Backward)
        .value("forward", NtkAlgorithm::Forward)
        .value("auto", NtkAlgorithm::Auto);

    py::enum_<KernelKind>(m, "KernelKind")
        .value("ntk", KernelKind::NTK)
        .value("ck", KernelKind::CK)
        .value("e", KernelKind::E);

    py::class_<Mlp>(m, "Mlp")
        .def_readonly("dims", &Mlp::dims)
        .def_property_readonly("activation", [](const Mlp& net) { return to_string(net.activation); })
        .def("parameter_count", &Mlp::parameter_count)
        .def("to_json", &checkpoint_to_string)
        .def_static("from_json", &checkpoint_from_string);

    m.def("init_mlp", &init_mlp, py::arg("dims"), py::arg("activation"), py::arg("seed"));
    m.def("save_mlp", &save_mlp, py::arg("net"), py::arg("path"));
    m.def("load_mlp", &load_mlp, py::arg("path"));

    m.def(
        "forward",
        [](const Mlp& net, const Matrix& inputs) { return forward(net, inputs).output(); },
        py::arg("net"), py::arg("inputs"), "Network outputs, one column per input column");

    m.def(
        "train_regression",
        [](const Mlp& net, const Matrix& nodes, const Vector& weights, const Vector& targets,
           double learning_rate, int epochs) {
            TrainData data;
            data.nodes = nodes;
            data.weights = weights;
            data.targets = targets;
            TrainConfig config;
            config.learning_rate = learning_rate;
            config.epochs = epochs;
            config.loss = LossKind::WeightedMse;
            TrainResult result = train_adam(net, data, config);
            return py::make_tuple(result.net, result.loss_history);
        },
        py::arg("net"), py::arg("nodes"), py::arg("weights"), py::arg("targets"),
        py::arg("learning_rate") = 1e-3, py::arg("epochs") = 100);

    m.def(
        "ntk_gram",
        [](const Mlp& net, const Matrix& nodes, NtkAlgorithm algorithm) {
            return ntk_gram(net, nodes, algorithm, default_contraction(net)).H;
        },
        py::arg("net"), py::arg("nodes"), py::arg("algorithm") = NtkAlgorithm::Auto);
    m.def(
        "ntk_gram_cross",
        [](const Mlp& net, const Matrix& nodes_a, const Matrix& nodes_b, NtkAlgorithm algorithm) {
            return ntk_gram(net, nodes_a, nodes_b, algorithm, default_contraction(net)).H;
        },
        py::arg("net"), py::arg("nodes_a"), py::arg("nodes_b"),
        py::arg("algorithm") = NtkAlgorithm::Auto);
    m.def(
        "ck_gram",
        [](const Mlp& net, const Matrix& nodes) { return ck_gram(net, nodes).H; },
        py::arg("net"), py::arg("nodes"));
    m.def("ck_features", &ck_features, py::arg("net"), py::arg("nodes"));
    m.def(
        "ntk_oracle",
        [](const Mlp& net, const Vector& x, const Vector& xh) { return ntk_oracle(net, x, xh); },
        py::arg("net"), py::arg("x"), py::arg("xh"));

    py::class_<WeightedGrid>(m, "WeightedGrid")
        .def(py::init([](const Matrix& nodes, const Vector& weights) {
                 WeightedGrid grid{nodes, weights};
                 grid.validate();
                 return grid;
             }),
             py::arg("nodes"), py::arg("weights"))
        .def_readonly("nodes", &WeightedGrid::nodes)
        .def_readonly("weights", &WeightedGrid::weights);

    py::class_<Grid1DPair>(m, "Grid1DPair")
        .def_readonly("train", &Grid1DPair::train)
        .def_readonly("test", &Grid1DPair::test)
        .def_readonly("tau", &Grid1DPair::tau);
    m.def("make_grid_1d", &make_grid_1d, py::arg("a"), py::arg("b"), py::arg("n_train"),
          py::arg("n_test"));
    m.def("weighted_norm", &weighted_norm, py::arg("values"), py::arg("grid"));

    py::class_<RegressionFit>(m, "RegressionFit")
        .def_readonly("coeffs", &RegressionFit::coeffs)
        .def_property_readonly("kernel", [](const RegressionFit& f) { return to_string(f.kind); })
        .def_property_readonly("form", [](const RegressionFit& f) { return to_string(f.form); });

    m.def(
        "fit_kernel_regression",
        [](const Mlp& net, KernelKind kind, const WeightedGrid& grid, const Vector& y,
           double rcond) {
            const KernelGram gram =
                kernel_gram(net, kind, grid.nodes, NtkAlgorithm::Auto, default_contraction(net));
            RegressionFit fit = fit_kernel_form(gram, grid, y, rcond);
            fit.contraction = default_contraction(net);
            return fit;
        },
        py::arg("net"), py::arg("kind"), py::arg("grid"), py::arg("y"), py::arg("rcond") = 1e-12);
    m.def(
        "fit_ck_features",
        [](const Mlp& net, const WeightedGrid& grid, const Vector& y, double rcond) {
            return fit_feature_form(ck_features(net, grid.nodes), KernelKind::CK, grid, y, rcond);
        },
        py::arg("net"), py::arg("grid"), py::arg("y"), py::arg("rcond") = 1e-12);
    m.def(
        "predict",
        [](const RegressionFit& fit, const Mlp& net, const Matrix& nodes) {
            return predict(fit, net, nodes);
        },
        py::arg("fit"), py::arg("net"), py::arg("nodes"));

    py::class_<LogisticFit>(m, "LogisticFit")
        .def_readonly("alpha", &LogisticFit::alpha)
        .def_readonly("iterations", &LogisticFit::iterations)
        .def_readonly("converged", &LogisticFit::converged)
        .def_readonly("grad_norm", &LogisticFit::grad_norm);

    m.def(
        "fit_kernel_logistic",
        [](const Mlp& net, KernelKind kind, const Matrix& nodes, const IntVector& labels,
           double tol, int max_iter) {
            const KernelGram gram =
                kernel_gram(net, kind, nodes, NtkAlgorithm::Auto, default_contraction(net));
            LogisticFit fit = newton_fit(gram, labels, tol, max_iter);
            fit.contraction = default_contraction(net);
            return fit;
        },
        py::arg("net"), py::arg("kind"), py::arg("nodes"), py::arg("labels"),
        py::arg("tol") = 1e-8, py::arg("max_iter") = 100);
    m.def(
        "predict_prob",
        [](const LogisticFit& fit, const Mlp& net, const Matrix& nodes) {
            return predict_prob(fit, net, nodes);
        },
        py::arg("fit"), py::arg("net"), py::arg("nodes"));

    m.def(
        "run_experiment_json",
        [](const std::string& config_json, const std::string& out_dir) {
            const ExperimentConfig config =
                ExperimentConfig::from_json(nlohmann::json::parse(config_json));
            const std::vector<RunRecord> records = run_experiment(config);
            write_experiment_outputs(config, records, out_dir);
            long diverged = 0;
            for (const auto& record : records)
                if (record.diverged) ++diverged;
            return py::make_tuple(static_cast<long>(records.size()), diverged);
        },
        py::arg("config_json"), py::arg("out_dir"),
        "Run a full study from a config string; returns (seeds, diverged)");

    m.attr("__version__") = "0.1.0";
}
