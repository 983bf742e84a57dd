#pragma once

#include <optional>

#include "kslab/ck.hpp"
#include "kslab/ntk.hpp"

namespace kslab {

// Dispatch over kernel kinds; E is assembled as NTK minus CK.
KernelGram kernel_gram(const Mlp& net, KernelKind kind, const Matrix& nodes_a,
                       const Matrix& nodes_b, NtkAlgorithm choice = NtkAlgorithm::Auto,
                       const std::optional<Vector>& contraction = std::nullopt);
KernelGram kernel_gram(const Mlp& net, KernelKind kind, const Matrix& nodes,
                       NtkAlgorithm choice = NtkAlgorithm::Auto,
                       const std::optional<Vector>& contraction = std::nullopt);

/// Contraction to use for a given network: none for scalar output, f_1 - f_2
/// for two-output classifiers.
std::optional<Vector> default_contraction(const Mlp& net);

}  // namespace kslab
