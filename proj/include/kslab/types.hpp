#pragma once

#include <atomic>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace kslab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;

/// Which kernel a Gram matrix or fit belongs to. E is the tangent kernel
/// minus the last-layer (conjugate) part.
enum class KernelKind { NTK, CK, E };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

/// Kernel matrix over two node sets, with the nodes kept alongside so fits
/// can be checked against the grid they came from.
struct KernelGram {
    Matrix H;
    KernelKind kind = KernelKind::NTK;
    Matrix nodes_a;  // one column per node
    Matrix nodes_b;
    bool symmetric = false;
};

/// FNV-1a over the raw node coordinates; used to tag fit artifacts with the
/// training set they were computed on.
std::string node_hash(const Matrix& nodes);

namespace counters {
// Cheap instrumentation so tests can assert which code paths a routine used.
inline std::atomic<std::uint64_t> forward_batches{0};
inline std::atomic<std::uint64_t> gradient_passes{0};
}  // namespace counters

}  // namespace kslab
