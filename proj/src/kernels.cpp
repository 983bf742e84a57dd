#include "kslab/kernels.hpp"

#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace kslab {

std::string to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::NTK: return "ntk";
        case KernelKind::CK: return "ck";
        default: return "e";
    }
}

KernelKind kernel_kind_from_string(const std::string& name) {
    if (name == "ntk") return KernelKind::NTK;
    if (name == "ck") return KernelKind::CK;
    if (name == "e") return KernelKind::E;
    throw std::invalid_argument("unknown kernel kind: " + name);
}

std::string node_hash(const Matrix& nodes) {
    std::uint64_t hash = 1469598103934665603ull;
    auto mix = [&hash](std::uint64_t v) {
        for (int byte = 0; byte < 8; ++byte) {
            hash ^= (v >> (8 * byte)) & 0xffu;
            hash *= 1099511628211ull;
        }
    };
    mix(static_cast<std::uint64_t>(nodes.rows()));
    mix(static_cast<std::uint64_t>(nodes.cols()));
    for (Eigen::Index j = 0; j < nodes.cols(); ++j)
        for (Eigen::Index i = 0; i < nodes.rows(); ++i) {
            std::uint64_t bits;
            const double value = nodes(i, j);
            static_assert(sizeof(bits) == sizeof(value));
            std::memcpy(&bits, &value, sizeof(bits));
            mix(bits);
        }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return std::string(buf);
}

KernelGram kernel_gram(const Mlp& net, KernelKind kind, const Matrix& nodes_a,
                       const Matrix& nodes_b, NtkAlgorithm choice,
                       const std::optional<Vector>& contraction) {
    switch (kind) {
        case KernelKind::NTK: return ntk_gram(net, nodes_a, nodes_b, choice, contraction);
        case KernelKind::CK: return ck_gram(net, nodes_a, nodes_b);
        default: {
            KernelGram gram = ntk_gram(net, nodes_a, nodes_b, choice, contraction);
            gram.H -= ck_gram(net, nodes_a, nodes_b).H;
            gram.kind = KernelKind::E;
            return gram;
        }
    }
}

KernelGram kernel_gram(const Mlp& net, KernelKind kind, const Matrix& nodes,
                       NtkAlgorithm choice, const std::optional<Vector>& contraction) {
    switch (kind) {
        case KernelKind::NTK: return ntk_gram(net, nodes, choice, contraction);
        case KernelKind::CK: return ck_gram(net, nodes);
        default: {
            KernelGram gram = ntk_gram(net, nodes, choice, contraction);
            gram.H -= ck_gram(net, nodes).H;
            gram.kind = KernelKind::E;
            return gram;
        }
    }
}

std::optional<Vector> default_contraction(const Mlp& net) {
    if (net.output_dim() == 1) return std::nullopt;
    if (net.output_dim() == 2) return class_difference_contraction();
    throw std::invalid_argument("no default contraction for output width > 2");
}

}  // namespace kslab
