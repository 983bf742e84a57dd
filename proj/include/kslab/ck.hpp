#pragma once

#include "kslab/nn.hpp"
#include "kslab/types.hpp"

namespace kslab {

/// Conjugate-kernel feature map: last hidden-layer activations with an
/// appended constant 1 (the bias feature). Shape (d_L + 1) x #nodes, one
/// column per node. Costs a forward pass and nothing else.
Matrix ck_features(const Mlp& net, const Matrix& nodes);

/// CK(z, zt) = 1 + x^(L)(z) . x^(L)(zt); equals ck_features' Gram exactly.
KernelGram ck_gram(const Mlp& net, const Matrix& nodes_a, const Matrix& nodes_b);
KernelGram ck_gram(const Mlp& net, const Matrix& nodes);

}  // namespace kslab
