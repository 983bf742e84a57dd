#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "kslab/grids.hpp"
#include "kslab/kernels.hpp"

namespace kslab {

/// Kernel logistic classifier: coefficients over the training nodes plus a
/// record of how the Newton solve stopped.
struct LogisticFit {
    Vector alpha;
    KernelKind kind = KernelKind::NTK;
    Matrix train_nodes;
    std::optional<Vector> contraction;
    int iterations = 0;
    double grad_norm = 0.0;
    double damping = 0.0;
    bool converged = false;
    bool aborted = false;  // line search could not decrease the loss
    std::string stop_reason;
    std::vector<double> loss_history;  // loss after each accepted step
};

/// Cross-entropy of decision values H alpha against labels in {0,1},
/// evaluated in the overflow-free softplus form. kernel_rows holds
/// ker(z_i, x_j) for evaluation nodes i and training nodes j.
double logistic_loss(const Matrix& kernel_rows, const Vector& alpha, const IntVector& labels);

/// sum ln(1 + exp(psi_hat_i)) - the loss written in label-signed decision
/// values.
double logistic_loss_from_psi_hat(const Vector& psi_hat);

/// Damped Newton with halving line search on the training cross-entropy.
/// Stops when the gradient max-norm drops below tol or after max_iter
/// iterations (flagged non-converged).
LogisticFit newton_fit(const KernelGram& gram, const IntVector& labels, double tol = 1e-8,
                       int max_iter = 100);

// Decision values psi(z) = sum_j ker(z, x_j) alpha_j and derived outputs.
Vector decision_values(const LogisticFit& fit, const Mlp& net, const Matrix& nodes,
                       NtkAlgorithm choice = NtkAlgorithm::Auto);
Vector decision_values_from_rows(const LogisticFit& fit, const Matrix& kernel_rows);

Vector predict_prob(const LogisticFit& fit, const Mlp& net, const Matrix& nodes,
                    NtkAlgorithm choice = NtkAlgorithm::Auto);

/// p > 0.5 classifies as 1; the tie goes to class 0.
IntVector classify(const Vector& probabilities);
double classification_accuracy(const Vector& probabilities, const IntVector& labels);

struct PsiValues {
    Vector psi;      // decision values
    Vector psi_hat;  // (1 - 2 label) * psi
};

PsiValues psi_values(const LogisticFit& fit, const Mlp& net, const Matrix& nodes,
                     const IntVector& labels, NtkAlgorithm choice = NtkAlgorithm::Auto);

nlohmann::json logistic_fit_to_json(const LogisticFit& fit);

}  // namespace kslab
