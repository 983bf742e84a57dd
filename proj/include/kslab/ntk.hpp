#pragma once

#include <optional>

#include "kslab/nn.hpp"
#include "kslab/types.hpp"

namespace kslab {

/// Backward accumulates layer products from the output side and is the
/// cheaper scheme when the output width is below the hidden width; Forward
/// nests the recursion Horner-style alongside a forward pass and wins when
/// outputs are wider than the hidden layers. Per pair of inputs with output
/// width O, hidden width W and L hidden layers, Backward multiplies
/// O(L O W^2) and carries O(OW) of state, while Forward multiplies
/// O(L W^3 + O W^2) with O(W^2) of state. Auto picks Backward exactly when
/// output_dim < max hidden width. (Wall-clock ratios are hardware-dependent
/// and not asserted anywhere.)
enum class NtkAlgorithm { Backward, Forward, Auto };

NtkAlgorithm resolve_algorithm(NtkAlgorithm choice, const Mlp& net);
NtkAlgorithm ntk_algorithm_from_string(const std::string& name);
std::string to_string(NtkAlgorithm a);

/// Column-wise product A diag(b): column j of A scaled by b[j].
Matrix colwise(const Matrix& a, const Vector& b);

// Tangent-kernel block K(x, xhat) of shape output_dim x output_dim for a
// single pair of inputs, from traces produced by forward() on `net`.
Matrix ntk_pair_backward(const Mlp& net, const ForwardTrace& tx, const ForwardTrace& txh);
Matrix ntk_pair_forward(const Mlp& net, const ForwardTrace& tx, const ForwardTrace& txh);

/// Jacobian of the network outputs with respect to every parameter, one row
/// per output. Columns are ordered layer by layer, weights (row-major) then
/// bias. Input is a single column.
Matrix parameter_jacobian(const Mlp& net, const Vector& x);

/// Ground-truth kernel block assembled from explicit parameter Jacobians.
/// Guarded to networks with at most 100k parameters.
Matrix ntk_oracle(const Mlp& net, const Vector& x, const Vector& xh);

/// Tangent-kernel Gram matrix between two node sets. Entries are scalars:
/// the kernel of the contracted output c.f(x) when a contraction is given
/// (required for multi-output networks), or the plain kernel for scalar
/// output. The two-node-set overload never assumes symmetry; the one-set
/// overload computes the upper triangle and mirrors it.
KernelGram ntk_gram(const Mlp& net, const Matrix& nodes_a, const Matrix& nodes_b,
                    NtkAlgorithm choice = NtkAlgorithm::Auto,
                    const std::optional<Vector>& contraction = std::nullopt);
KernelGram ntk_gram(const Mlp& net, const Matrix& nodes,
                    NtkAlgorithm choice = NtkAlgorithm::Auto,
                    const std::optional<Vector>& contraction = std::nullopt);

/// Contraction used for two-output classifiers: the kernels of f_1 - f_2.
Vector class_difference_contraction();

double min_eigenvalue(const Matrix& symmetric);

}  // namespace kslab
