#pragma once

#include <cmath>
#include <random>

#include "kslab/nn.hpp"
#include "kslab/ntk.hpp"

namespace kslab::test {

inline bool rel_close(double a, double b, double rel, double abs_floor = 0.0) {
    return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), abs_floor / rel});
}

inline Matrix random_inputs(int dim, int count, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> uniform(-scale, scale);
    Matrix nodes(dim, count);
    for (int j = 0; j < count; ++j)
        for (int i = 0; i < dim; ++i) nodes(i, j) = uniform(rng);
    return nodes;
}

/// Smallest pre-activation magnitude over the trace; finite-difference
/// checks on ReLU nets need it away from the kink.
inline double min_preactivation(const kslab::ForwardTrace& trace) {
    double smallest = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l + 1 < trace.pre.size(); ++l)
        smallest = std::min(smallest, trace.pre[l].cwiseAbs().minCoeff());
    return smallest;
}

/// Network + inputs whose hidden pre-activations stay clear of zero, so
/// one-sided activation derivatives are finite-difference measurable.
inline std::pair<Mlp, Matrix> net_with_clear_kinks(const std::vector<int>& dims,
                                                   Activation activation, std::uint64_t seed,
                                                   int input_count, double margin = 1e-3) {
    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const Mlp net = init_mlp(dims, activation, seed + 7919 * attempt);
        const Matrix inputs = random_inputs(dims.front(), input_count, rng);
        bool clear = true;
        for (int j = 0; j < input_count && clear; ++j)
            clear = min_preactivation(forward(net, inputs.col(j))) > margin;
        if (clear) return {net, inputs};
    }
    throw std::runtime_error("could not sample a kink-free network");
}

/// Central finite differences of the network outputs with respect to every
/// parameter, matching the column layout of parameter_jacobian.
inline Matrix fd_parameter_jacobian(const Mlp& net, const Vector& x, double step = 1e-5) {
    Mlp bumped = net;
    Matrix jac(net.output_dim(), net.parameter_count());
    long col = 0;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        for (int r = 0; r < net.weights[l].rows(); ++r)
            for (int c = 0; c < net.weights[l].cols(); ++c) {
                bumped.weights[l](r, c) = net.weights[l](r, c) + step;
                const Matrix up = forward(bumped, x).output();
                bumped.weights[l](r, c) = net.weights[l](r, c) - step;
                const Matrix down = forward(bumped, x).output();
                bumped.weights[l](r, c) = net.weights[l](r, c);
                jac.col(col++) = (up - down) / (2.0 * step);
            }
        for (int r = 0; r < net.biases[l].size(); ++r) {
            bumped.biases[l][r] = net.biases[l][r] + step;
            const Matrix up = forward(bumped, x).output();
            bumped.biases[l][r] = net.biases[l][r] - step;
            const Matrix down = forward(bumped, x).output();
            bumped.biases[l][r] = net.biases[l][r];
            jac.col(col++) = (up - down) / (2.0 * step);
        }
    }
    return jac;
}

}  // namespace kslab::test
