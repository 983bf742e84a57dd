#pragma once

#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "kslab/grids.hpp"
#include "kslab/kernels.hpp"

namespace kslab {

enum class FitForm { KernelForm, FeatureForm, OrthoBasisForm };

std::string to_string(FitForm form);

/// Hierarchical basis orthonormal under the weighted training inner
/// product. node_values(i, j) = u_j(x_i). change_of_basis (the right
/// singular vectors over feature space) is empty when the basis was
/// extracted from the kernel matrix alone; evaluation then goes through
/// kernel rows instead of the feature map.
struct OrthoBasis {
    Matrix node_values;
    Vector singular_values;
    Matrix change_of_basis;
    int rank = 0;
    KernelKind kind = KernelKind::CK;
    WeightedGrid train;
    double rcond = 0.0;
};

/// Weighted least-squares fit in one of three equivalent representations:
/// coefficients over training nodes (kernel form), over feature components
/// (feature form), or over orthonormal basis functions.
struct RegressionFit {
    FitForm form = FitForm::KernelForm;
    KernelKind kind = KernelKind::NTK;
    Vector coeffs;
    WeightedGrid train;
    double rcond = 0.0;
    std::optional<Vector> contraction;        // kernel evaluation for 2-output nets
    std::shared_ptr<const OrthoBasis> basis;  // OrthoBasisForm only
    // Fitted values at the training nodes, evaluated in the decomposition
    // basis. The generic kernel-row evaluation loses ~cond(H)*eps digits,
    // so training residuals should come from here.
    Vector train_predictions;
};

/// Closed-form weighted kernel regression: prediction y' W^(1/2) pinv(Hhat)
/// W^(1/2) k(., z) with Hhat = W^(1/2) H W^(1/2); eigenvalues below
/// rcond * max are truncated. H must be symmetric over the training nodes.
RegressionFit fit_kernel_form(const KernelGram& gram, const WeightedGrid& grid, const Vector& y,
                              double rcond = 1e-12);

/// Weighted linear regression on feature columns phi (one column per node):
/// truncated-SVD least squares on the sqrt(w)-scaled system. This is the
/// better-conditioned route available when the feature space is small.
RegressionFit fit_feature_form(const Matrix& phi, KernelKind kind, const WeightedGrid& grid,
                               const Vector& y, double rcond = 1e-12);

OrthoBasis ortho_basis_from_features(const Matrix& phi, KernelKind kind, const WeightedGrid& grid,
                                     double rcond = 1e-12);
OrthoBasis ortho_basis_from_kernel(const KernelGram& gram, const WeightedGrid& grid,
                                   double rcond = 1e-12);

/// Projection coefficients <f, u_j>_0 of the target onto the basis.
RegressionFit fit_ortho_form(std::shared_ptr<const OrthoBasis> basis, const Vector& y);

/// Evaluate a fit given the raw ingredients: kernel rows (query x train) for
/// the kernel form, feature columns for the feature form. Used by tests with
/// synthetic kernels; predict() derives the ingredients from a network.
Vector predict_from_kernel_rows(const RegressionFit& fit, const Matrix& kernel_rows);
Vector predict_from_features(const RegressionFit& fit, const Matrix& phi);

Vector predict(const RegressionFit& fit, const Mlp& net, const Matrix& nodes,
               NtkAlgorithm choice = NtkAlgorithm::Auto);

double training_loss(const RegressionFit& fit, const Mlp& net, const Vector& y,
                     NtkAlgorithm choice = NtkAlgorithm::Auto);

struct ProjectionReport {
    double beta = 0.0;      // |P_ntk f|_0 / |f|_0
    bool beta_defined = true;
    double residual_ntk = 0.0;   // |f - f_ntk|_0
    double residual_ck = 0.0;    // |f - f_ck|_0
    double f_norm = 0.0;
    double projection_norm = 0.0;  // |f_ntk|_0
    double split_lhs = 0.0;        // |f|_0^2
    double split_rhs = 0.0;        // |f_ntk|_0^2 + |f - f_ntk|_0^2
};

ProjectionReport projection_diagnostics(const Vector& f_train, const Vector& ntk_train_pred,
                                        const Vector& ck_train_pred, const WeightedGrid& grid);

nlohmann::json fit_to_json(const RegressionFit& fit);

}  // namespace kslab
