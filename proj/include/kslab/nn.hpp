#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kslab/types.hpp"

namespace kslab {

enum class Activation { Tanh, ReLU };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// Entrywise sigma and sigma'. ReLU uses sigma'(0) = 0 so that kernel
// extraction and training agree on the subgradient at the kink.
double activate(Activation a, double y);
double activate_derivative(Activation a, double y);
Matrix activate(Activation a, const Matrix& y);
Matrix activate_derivative(Activation a, const Matrix& y);

/// Fully connected network: hidden layers apply sigma(W z + b), the output
/// layer is affine. weights[l] has shape dims[l+1] x dims[l].
struct Mlp {
    std::vector<int> dims;
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
    Activation activation = Activation::Tanh;

    int input_dim() const { return dims.front(); }
    int output_dim() const { return dims.back(); }
    int hidden_layers() const { return static_cast<int>(weights.size()) - 1; }
    int max_hidden_width() const;
    long parameter_count() const;
    void validate() const;
};

/// Glorot-normal weights (stddev sqrt(2/(fan_in+fan_out))), zero biases.
/// Deterministic for a fixed seed.
Mlp init_mlp(const std::vector<int>& dims, Activation activation, std::uint64_t seed);

/// Per-layer values captured by one forward pass over a batch (one column
/// per input). pre[k] holds layer k+1 pre-activations for k = 0..L;
/// post[k] holds layer k activations for k = 0..L with post[0] the input.
/// The network output is pre.back() (no activation on the last layer).
struct ForwardTrace {
    std::vector<Matrix> pre;
    std::vector<Matrix> post;
    const Matrix& output() const { return pre.back(); }
};

ForwardTrace forward(const Mlp& net, const Matrix& inputs);

enum class LossKind { WeightedMse, CrossEntropy };

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 2400;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::WeightedMse;
    std::optional<double> stop_accuracy;  // classification early stop
    void validate() const;
};

/// Training inputs. Regression uses (nodes, weights, targets); binary
/// classification uses (nodes, labels) with labels in {0,1} and a
/// two-output network classifying via f_1 - f_2.
struct TrainData {
    Matrix nodes;
    Vector weights;
    Vector targets;
    IntVector labels;
};

double weighted_mse(const Mlp& net, const Matrix& nodes, const Vector& weights,
                    const Vector& targets);
double cross_entropy(const Mlp& net, const Matrix& nodes, const IntVector& labels);
double nn_loss(const Mlp& net, const TrainData& data, LossKind kind);

/// f_1 - f_2 for a two-output classifier; the sigmoid of this difference is
/// the predicted probability of class 1.
Vector nn_decision_values(const Mlp& net, const Matrix& nodes);
double nn_accuracy(const Mlp& net, const Matrix& nodes, const IntVector& labels);

struct LossGradients {
    std::vector<Matrix> weight_grads;
    std::vector<Vector> bias_grads;
    Matrix outputs;  // network outputs at the evaluation point, one column per node
    double loss = 0.0;
};
LossGradients loss_gradients(const Mlp& net, const TrainData& data, LossKind kind);

struct TrainResult {
    Mlp net;
    std::vector<double> loss_history;      // entry 0 before training, then one per epoch
    std::vector<double> accuracy_history;  // classification only, same layout
    int epochs_run = 0;
    bool stopped_early = false;
};

using CheckpointFn = std::function<void(int epoch, const Mlp& net)>;

/// Full-batch ADAM. Deterministic for fixed inputs; throws on NaN loss
/// (diverged training). on_checkpoint fires at the listed epochs, with
/// epoch 0 meaning the untouched input network.
TrainResult train_adam(const Mlp& net, const TrainData& data, const TrainConfig& config,
                       const std::vector<int>& checkpoint_epochs = {},
                       const CheckpointFn& on_checkpoint = nullptr);

// Checkpoint format: {"dims": [...], "activation": "tanh"|"relu",
//  "layers": [{"W": row-major values, "b": values}, ...]}. Round-trips exactly.
nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);
void save_mlp(const Mlp& net, const std::string& path);
Mlp load_mlp(const std::string& path);

}  // namespace kslab
