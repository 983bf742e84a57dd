#include "kslab/nn.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace kslab {

std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "relu"; }

Activation activation_from_string(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "relu") return Activation::ReLU;
    throw std::invalid_argument("unknown activation: " + name);
}

double activate(Activation a, double y) {
    return a == Activation::Tanh ? std::tanh(y) : (y > 0.0 ? y : 0.0);
}

double activate_derivative(Activation a, double y) {
    if (a == Activation::Tanh) {
        const double t = std::tanh(y);
        return 1.0 - t * t;
    }
    return y > 0.0 ? 1.0 : 0.0;
}

Matrix activate(Activation a, const Matrix& y) {
    if (a == Activation::Tanh) return y.array().tanh().matrix();
    return y.cwiseMax(0.0);
}

Matrix activate_derivative(Activation a, const Matrix& y) {
    if (a == Activation::Tanh) return (1.0 - y.array().tanh().square()).matrix();
    return (y.array() > 0.0).cast<double>().matrix();
}

int Mlp::max_hidden_width() const {
    int w = 0;
    for (std::size_t l = 1; l + 1 < dims.size(); ++l) w = std::max(w, dims[l]);
    return w;
}

long Mlp::parameter_count() const {
    long n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

void Mlp::validate() const {
    if (dims.size() < 3) throw std::invalid_argument("Mlp needs at least one hidden layer");
    if (weights.size() + 1 != dims.size() || biases.size() != weights.size())
        throw std::invalid_argument("Mlp layer count inconsistent with dims");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (dims[l] < 1 || dims[l + 1] < 1) throw std::invalid_argument("Mlp widths must be >= 1");
        if (weights[l].rows() != dims[l + 1] || weights[l].cols() != dims[l])
            throw std::invalid_argument("Mlp weight shape inconsistent with dims");
        if (biases[l].size() != dims[l + 1])
            throw std::invalid_argument("Mlp bias length inconsistent with dims");
        if (!weights[l].allFinite() || !biases[l].allFinite())
            throw std::invalid_argument("Mlp parameters must be finite");
    }
}

Mlp init_mlp(const std::vector<int>& dims, Activation activation, std::uint64_t seed) {
    if (dims.size() < 3) throw std::invalid_argument("init_mlp: dims must list input, hidden, output widths");
    for (int d : dims)
        if (d < 1) throw std::invalid_argument("init_mlp: zero or negative layer width");

    Mlp net;
    net.dims = dims;
    net.activation = activation;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double stddev = std::sqrt(2.0 / (fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i)
            for (int j = 0; j < fan_in; ++j) w(i, j) = stddev * gauss(rng);
        net.weights.push_back(std::move(w));
        net.biases.push_back(Vector::Zero(fan_out));
    }
    return net;
}

ForwardTrace forward(const Mlp& net, const Matrix& inputs) {
    if (inputs.rows() != net.input_dim())
        throw std::invalid_argument("forward: input dimension mismatch");
    counters::forward_batches.fetch_add(1, std::memory_order_relaxed);

    ForwardTrace trace;
    const int depth = static_cast<int>(net.weights.size());
    trace.pre.reserve(depth);
    trace.post.reserve(depth);
    trace.post.push_back(inputs);
    for (int l = 0; l < depth; ++l) {
        Matrix pre = (net.weights[l] * trace.post.back()).colwise() + net.biases[l];
        if (l + 1 < depth) trace.post.push_back(activate(net.activation, pre));
        trace.pre.push_back(std::move(pre));
    }
    return trace;
}

namespace {

double stable_softplus(double t) {
    // ln(1 + e^t) without overflow.
    return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

void check_finite_outputs(const Matrix& outputs) {
    if (!outputs.allFinite())
        throw std::runtime_error("network produced non-finite outputs (diverged training?)");
}

}  // namespace

double weighted_mse(const Mlp& net, const Matrix& nodes, const Vector& weights,
                    const Vector& targets) {
    if (net.output_dim() != 1)
        throw std::invalid_argument("weighted_mse: network must have one output");
    if (weights.size() != nodes.cols() || targets.size() != nodes.cols())
        throw std::invalid_argument("weighted_mse: length mismatch");
    const Matrix out = forward(net, nodes).output();
    check_finite_outputs(out);
    const Vector residual = out.row(0).transpose() - targets;
    return (weights.array() * residual.array().square()).sum();
}

double cross_entropy(const Mlp& net, const Matrix& nodes, const IntVector& labels) {
    if (net.output_dim() != 2)
        throw std::invalid_argument("cross_entropy: classifier needs two outputs");
    if (labels.size() != nodes.cols())
        throw std::invalid_argument("cross_entropy: length mismatch");
    const Vector diff = nn_decision_values(net, nodes);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < diff.size(); ++i) {
        const double sign = 1.0 - 2.0 * labels[i];
        loss += stable_softplus(sign * diff[i]);
    }
    return loss;
}

double nn_loss(const Mlp& net, const TrainData& data, LossKind kind) {
    return kind == LossKind::WeightedMse
               ? weighted_mse(net, data.nodes, data.weights, data.targets)
               : cross_entropy(net, data.nodes, data.labels);
}

Vector nn_decision_values(const Mlp& net, const Matrix& nodes) {
    if (net.output_dim() != 2)
        throw std::invalid_argument("nn_decision_values: classifier needs two outputs");
    const Matrix out = forward(net, nodes).output();
    check_finite_outputs(out);
    return (out.row(0) - out.row(1)).transpose();
}

double nn_accuracy(const Mlp& net, const Matrix& nodes, const IntVector& labels) {
    const Vector diff = nn_decision_values(net, nodes);
    long correct = 0;
    for (Eigen::Index i = 0; i < diff.size(); ++i) {
        const int predicted = diff[i] > 0.0 ? 1 : 0;  // tie classifies as 0
        if (predicted == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

LossGradients loss_gradients(const Mlp& net, const TrainData& data, LossKind kind) {
    counters::gradient_passes.fetch_add(1, std::memory_order_relaxed);
    const int depth = static_cast<int>(net.weights.size());
    const ForwardTrace trace = forward(net, data.nodes);
    const Matrix& out = trace.output();
    check_finite_outputs(out);

    LossGradients grads;
    grads.weight_grads.resize(depth);
    grads.bias_grads.resize(depth);

    // dL/d(output), one column per node.
    Matrix delta;
    if (kind == LossKind::WeightedMse) {
        const Vector residual = out.row(0).transpose() - data.targets;
        grads.loss = (data.weights.array() * residual.array().square()).sum();
        delta = (2.0 * data.weights.array() * residual.array()).matrix().transpose();
    } else {
        const Vector diff = (out.row(0) - out.row(1)).transpose();
        delta.resize(2, diff.size());
        grads.loss = 0.0;
        for (Eigen::Index i = 0; i < diff.size(); ++i) {
            const double sign = 1.0 - 2.0 * data.labels[i];
            grads.loss += stable_softplus(sign * diff[i]);
            const double p = 1.0 / (1.0 + std::exp(-diff[i]));
            const double g = p - static_cast<double>(data.labels[i]);
            delta(0, i) = g;
            delta(1, i) = -g;
        }
    }

    for (int l = depth - 1; l >= 0; --l) {
        grads.weight_grads[l] = delta * trace.post[l].transpose();
        grads.bias_grads[l] = delta.rowwise().sum();
        if (l > 0)
            delta = (net.weights[l].transpose() * delta)
                        .cwiseProduct(activate_derivative(net.activation, trace.pre[l - 1]));
    }
    grads.outputs = out;
    return grads;
}

namespace {

double accuracy_from_outputs(const Matrix& outputs, const IntVector& labels) {
    long correct = 0;
    for (Eigen::Index i = 0; i < outputs.cols(); ++i) {
        const int predicted = outputs(0, i) - outputs(1, i) > 0.0 ? 1 : 0;
        if (predicted == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0))
        throw std::invalid_argument("adam betas must lie in (0,1)");
    if (!(adam_eps > 0.0)) throw std::invalid_argument("adam_eps must be positive");
    if (stop_accuracy && !(*stop_accuracy > 0.0 && *stop_accuracy <= 1.0))
        throw std::invalid_argument("stop_accuracy must lie in (0,1]");
}

TrainResult train_adam(const Mlp& net, const TrainData& data, const TrainConfig& config,
                       const std::vector<int>& checkpoint_epochs,
                       const CheckpointFn& on_checkpoint) {
    config.validate();
    net.validate();

    TrainResult result;
    result.net = net;

    const int depth = static_cast<int>(net.weights.size());
    std::vector<Matrix> m_w(depth), v_w(depth);
    std::vector<Vector> m_b(depth), v_b(depth);
    for (int l = 0; l < depth; ++l) {
        m_w[l] = Matrix::Zero(net.weights[l].rows(), net.weights[l].cols());
        v_w[l] = m_w[l];
        m_b[l] = Vector::Zero(net.biases[l].size());
        v_b[l] = m_b[l];
    }

    auto checkpoint_due = [&](int epoch) {
        return on_checkpoint &&
               std::find(checkpoint_epochs.begin(), checkpoint_epochs.end(), epoch) !=
                   checkpoint_epochs.end();
    };
    const bool classify = config.loss == LossKind::CrossEntropy;

    if (checkpoint_due(0)) on_checkpoint(0, result.net);

    // Each epoch runs one gradient pass at the current parameters; its loss
    // is the pre-update value, so the history entry for the final network is
    // appended after the loop.
    double beta1_pow = 1.0;
    double beta2_pow = 1.0;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const LossGradients grads = loss_gradients(result.net, data, config.loss);
        if (!std::isfinite(grads.loss)) throw std::runtime_error("training diverged: loss is not finite");
        result.loss_history.push_back(grads.loss);
        if (classify) {
            const double acc = accuracy_from_outputs(grads.outputs, data.labels);
            result.accuracy_history.push_back(acc);
            if (config.stop_accuracy && acc > *config.stop_accuracy) {
                result.stopped_early = true;
                return result;  // current network already crosses the threshold
            }
        }

        beta1_pow *= config.adam_beta1;
        beta2_pow *= config.adam_beta2;
        const double m_scale = 1.0 / (1.0 - beta1_pow);
        const double v_scale = 1.0 / (1.0 - beta2_pow);
        for (int l = 0; l < depth; ++l) {
            m_w[l] = config.adam_beta1 * m_w[l] + (1.0 - config.adam_beta1) * grads.weight_grads[l];
            v_w[l] = config.adam_beta2 * v_w[l] +
                     (1.0 - config.adam_beta2) * grads.weight_grads[l].cwiseAbs2();
            result.net.weights[l].array() -=
                config.learning_rate * (m_w[l].array() * m_scale) /
                ((v_w[l].array() * v_scale).sqrt() + config.adam_eps);

            m_b[l] = config.adam_beta1 * m_b[l] + (1.0 - config.adam_beta1) * grads.bias_grads[l];
            v_b[l] = config.adam_beta2 * v_b[l] +
                     (1.0 - config.adam_beta2) * grads.bias_grads[l].cwiseAbs2();
            result.net.biases[l].array() -=
                config.learning_rate * (m_b[l].array() * m_scale) /
                ((v_b[l].array() * v_scale).sqrt() + config.adam_eps);
        }
        result.epochs_run = epoch;
        if (checkpoint_due(epoch)) on_checkpoint(epoch, result.net);
    }

    const double final_loss = nn_loss(result.net, data, config.loss);
    if (!std::isfinite(final_loss)) throw std::runtime_error("training diverged: loss is not finite");
    result.loss_history.push_back(final_loss);
    if (classify)
        result.accuracy_history.push_back(nn_accuracy(result.net, data.nodes, data.labels));
    return result;
}

nlohmann::json mlp_to_json(const Mlp& net) {
    nlohmann::json j;
    j["dims"] = net.dims;
    j["activation"] = to_string(net.activation);
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        nlohmann::json layer;
        std::vector<double> w(net.weights[l].size());
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            w.data(), net.weights[l].rows(), net.weights[l].cols()) = net.weights[l];
        layer["W"] = w;
        layer["b"] = std::vector<double>(net.biases[l].data(),
                                         net.biases[l].data() + net.biases[l].size());
        layers.push_back(std::move(layer));
    }
    j["layers"] = std::move(layers);
    return j;
}

Mlp mlp_from_json(const nlohmann::json& j) {
    Mlp net;
    net.dims = j.at("dims").get<std::vector<int>>();
    net.activation = activation_from_string(j.at("activation").get<std::string>());
    const auto& layers = j.at("layers");
    if (net.dims.size() < 2 || layers.size() + 1 != net.dims.size())
        throw std::invalid_argument("checkpoint layers inconsistent with dims");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto w = layers[l].at("W").get<std::vector<double>>();
        const auto b = layers[l].at("b").get<std::vector<double>>();
        const int rows = net.dims[l + 1];
        const int cols = net.dims[l];
        if (static_cast<int>(w.size()) != rows * cols || static_cast<int>(b.size()) != rows)
            throw std::invalid_argument("checkpoint layer size mismatch");
        Matrix weight(rows, cols);
        weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                Eigen::RowMajor>>(w.data(), rows, cols);
        net.weights.push_back(std::move(weight));
        net.biases.push_back(Eigen::Map<const Vector>(b.data(), rows));
    }
    net.validate();
    return net;
}

void save_mlp(const Mlp& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << mlp_to_json(net).dump(2) << "\n";
}

Mlp load_mlp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    nlohmann::json j;
    in >> j;
    return mlp_from_json(j);
}

}  // namespace kslab
