#include "kslab/kreg.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace kslab {

std::string to_string(FitForm form) {
    switch (form) {
        case FitForm::KernelForm: return "kernel";
        case FitForm::FeatureForm: return "feature";
        default: return "ortho";
    }
}

namespace {

void check_grid_fit(const WeightedGrid& grid, const Vector& y) {
    grid.validate();
    if (y.size() != grid.size())
        throw std::invalid_argument("target count does not match training grid");
}

// Symmetric eigendecomposition with eigenvalues sorted descending.
struct SymmetricEig {
    Matrix vectors;
    Vector values;
};

SymmetricEig eig_descending(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition failed");
    SymmetricEig eig;
    eig.values = solver.eigenvalues().reverse();
    eig.vectors = solver.eigenvectors().rowwise().reverse();
    return eig;
}

void fix_column_signs(Matrix& m) {
    // Largest-magnitude entry of each column made positive, so dual-route
    // comparisons of basis functions are well defined.
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        Eigen::Index arg = 0;
        m.col(j).cwiseAbs().maxCoeff(&arg);
        if (m(arg, j) < 0.0) m.col(j) = -m.col(j);
    }
}

}  // namespace

RegressionFit fit_kernel_form(const KernelGram& gram, const WeightedGrid& grid, const Vector& y,
                              double rcond) {
    check_grid_fit(grid, y);
    if (!(rcond > 0.0 && rcond < 1.0)) throw std::invalid_argument("rcond must lie in (0,1)");
    const Matrix& h = gram.H;
    if (h.rows() != grid.size() || h.cols() != grid.size())
        throw std::invalid_argument("kernel matrix does not cover the training grid");
    const double scale = h.cwiseAbs().maxCoeff();
    if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, scale))
        throw std::invalid_argument("kernel matrix must be symmetric");

    const Vector sqrt_w = grid.weights.array().sqrt();
    const Matrix h_hat = sqrt_w.asDiagonal() * h * sqrt_w.asDiagonal();
    const SymmetricEig eig = eig_descending(h_hat);
    const double cutoff = rcond * std::max(0.0, eig.values[0]);

    // delta = W^(1/2) pinv(Hhat) W^(1/2) y, so predictions are rows . delta.
    const Vector y_hat = sqrt_w.asDiagonal() * y;
    Vector inv_applied = Vector::Zero(y.size());
    Vector projected = Vector::Zero(y.size());
    for (Eigen::Index j = 0; j < eig.values.size(); ++j) {
        if (eig.values[j] <= cutoff) continue;
        const double component = eig.vectors.col(j).dot(y_hat);
        inv_applied += (component / eig.values[j]) * eig.vectors.col(j);
        projected += component * eig.vectors.col(j);
    }

    RegressionFit fit;
    fit.form = FitForm::KernelForm;
    fit.kind = gram.kind;
    fit.coeffs = sqrt_w.asDiagonal() * inv_applied;
    fit.train = grid;
    fit.rcond = rcond;
    // H delta re-derives the projection through the inverted eigenvalues and
    // loses precision on near-cutoff modes; undoing the weight scaling on
    // the projected coordinates keeps the fitted values exact.
    if ((grid.weights.array() > 0.0).all())
        fit.train_predictions = sqrt_w.cwiseInverse().asDiagonal() * projected;
    else
        fit.train_predictions = h * fit.coeffs;
    return fit;
}

RegressionFit fit_feature_form(const Matrix& phi, KernelKind kind, const WeightedGrid& grid,
                               const Vector& y, double rcond) {
    check_grid_fit(grid, y);
    if (!(rcond > 0.0 && rcond < 1.0)) throw std::invalid_argument("rcond must lie in (0,1)");
    if (phi.cols() != grid.size())
        throw std::invalid_argument("feature columns do not match training grid");

    const Vector sqrt_w = grid.weights.array().sqrt();
    const Matrix xi_hat_t = sqrt_w.asDiagonal() * phi.transpose();  // (N+1) x K
    Eigen::BDCSVD<Matrix> svd(xi_hat_t, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(rcond);

    RegressionFit fit;
    fit.form = FitForm::FeatureForm;
    fit.kind = kind;
    fit.coeffs = svd.solve(Vector(sqrt_w.asDiagonal() * y));
    fit.train = grid;
    fit.rcond = rcond;
    fit.train_predictions = phi.transpose() * fit.coeffs;
    return fit;
}

OrthoBasis ortho_basis_from_features(const Matrix& phi, KernelKind kind, const WeightedGrid& grid,
                                     double rcond) {
    grid.validate();
    if (phi.cols() != grid.size())
        throw std::invalid_argument("feature columns do not match training grid");
    const Vector sqrt_w = grid.weights.array().sqrt();
    const Matrix xi_hat_t = sqrt_w.asDiagonal() * phi.transpose();
    Eigen::BDCSVD<Matrix> svd(xi_hat_t, Eigen::ComputeThinU | Eigen::ComputeThinV);

    const Vector& s = svd.singularValues();
    const double cutoff = rcond * (s.size() > 0 ? s[0] : 0.0);
    int rank = 0;
    while (rank < s.size() && s[rank] > cutoff) ++rank;
    if (rank == 0) throw std::runtime_error("feature matrix has numerical rank zero");

    OrthoBasis basis;
    basis.rank = rank;
    basis.kind = kind;
    basis.train = grid;
    basis.rcond = rcond;
    basis.singular_values = s.head(rank);
    basis.node_values = sqrt_w.cwiseInverse().asDiagonal() * svd.matrixU().leftCols(rank);
    basis.change_of_basis = svd.matrixV().leftCols(rank);
    // Keep node values and the change of basis consistent: flipping u_j
    // flips its feature-space coordinates too.
    for (Eigen::Index j = 0; j < rank; ++j) {
        Eigen::Index arg = 0;
        basis.node_values.col(j).cwiseAbs().maxCoeff(&arg);
        if (basis.node_values(arg, j) < 0.0) {
            basis.node_values.col(j) = -basis.node_values.col(j);
            basis.change_of_basis.col(j) = -basis.change_of_basis.col(j);
        }
    }
    return basis;
}

OrthoBasis ortho_basis_from_kernel(const KernelGram& gram, const WeightedGrid& grid,
                                   double rcond) {
    grid.validate();
    const Matrix& h = gram.H;
    if (h.rows() != grid.size() || h.cols() != grid.size())
        throw std::invalid_argument("kernel matrix does not cover the training grid");

    const Vector sqrt_w = grid.weights.array().sqrt();
    const Matrix h_hat = sqrt_w.asDiagonal() * h * sqrt_w.asDiagonal();
    const SymmetricEig eig = eig_descending(h_hat);

    const double top = std::max(0.0, eig.values[0]);
    // Eigenvalues are squared singular values, and everything below the
    // eigensolver noise floor (~eps * top) is unresolvable; dividing by such
    // values would corrupt the basis functions.
    const double cutoff = std::max(rcond * rcond, 1e-14) * top;
    int rank = 0;
    while (rank < eig.values.size() && eig.values[rank] > cutoff) ++rank;
    if (rank == 0) throw std::runtime_error("kernel matrix has numerical rank zero");

    OrthoBasis basis;
    basis.rank = rank;
    basis.kind = gram.kind;
    basis.train = grid;
    basis.rcond = rcond;
    basis.singular_values = eig.values.head(rank).array().sqrt();
    basis.node_values = sqrt_w.cwiseInverse().asDiagonal() * eig.vectors.leftCols(rank);
    fix_column_signs(basis.node_values);
    return basis;
}

RegressionFit fit_ortho_form(std::shared_ptr<const OrthoBasis> basis, const Vector& y) {
    if (!basis) throw std::invalid_argument("fit_ortho_form: null basis");
    check_grid_fit(basis->train, y);
    RegressionFit fit;
    fit.form = FitForm::OrthoBasisForm;
    fit.kind = basis->kind;
    fit.train = basis->train;
    fit.rcond = basis->rcond;
    fit.coeffs.resize(basis->rank);
    for (int j = 0; j < basis->rank; ++j)
        fit.coeffs[j] = weighted_inner(y, basis->node_values.col(j), basis->train);
    fit.train_predictions = basis->node_values * fit.coeffs;
    fit.basis = std::move(basis);
    return fit;
}

Vector predict_from_kernel_rows(const RegressionFit& fit, const Matrix& kernel_rows) {
    if (kernel_rows.cols() != fit.train.size())
        throw std::invalid_argument("kernel rows do not match the training grid");
    if (fit.form == FitForm::KernelForm) return kernel_rows * fit.coeffs;
    if (fit.form == FitForm::OrthoBasisForm && fit.basis && fit.basis->change_of_basis.size() == 0) {
        // u_j(z) = s_j^-2 <u_j, ker(., z)>_0 evaluated for all queries at once.
        const OrthoBasis& basis = *fit.basis;
        const Matrix weighted_u = basis.train.weights.asDiagonal() * basis.node_values;
        const Matrix u_at_query = kernel_rows * weighted_u *
                                  basis.singular_values.array().square().inverse().matrix().asDiagonal();
        return u_at_query * fit.coeffs;
    }
    throw std::invalid_argument("fit form cannot be evaluated from kernel rows");
}

Vector predict_from_features(const RegressionFit& fit, const Matrix& phi) {
    if (fit.form == FitForm::FeatureForm) {
        if (phi.rows() != fit.coeffs.size())
            throw std::invalid_argument("feature dimension does not match the fit");
        return phi.transpose() * fit.coeffs;
    }
    if (fit.form == FitForm::OrthoBasisForm && fit.basis && fit.basis->change_of_basis.size() > 0) {
        const OrthoBasis& basis = *fit.basis;
        if (phi.rows() != basis.change_of_basis.rows())
            throw std::invalid_argument("feature dimension does not match the basis");
        const Matrix u_at_query = (basis.change_of_basis.transpose() * phi).transpose() *
                                  basis.singular_values.cwiseInverse().asDiagonal();
        return u_at_query * fit.coeffs;
    }
    throw std::invalid_argument("fit form cannot be evaluated from features");
}

Vector predict(const RegressionFit& fit, const Mlp& net, const Matrix& nodes,
               NtkAlgorithm choice) {
    const bool feature_route =
        fit.form == FitForm::FeatureForm ||
        (fit.form == FitForm::OrthoBasisForm && fit.basis && fit.basis->change_of_basis.size() > 0);
    if (feature_route) {
        if (fit.kind != KernelKind::CK)
            throw std::invalid_argument("feature-form evaluation is only available for the CK");
        return predict_from_features(fit, ck_features(net, nodes));
    }
    const KernelGram rows =
        kernel_gram(net, fit.kind, nodes, fit.train.nodes, choice, fit.contraction);
    return predict_from_kernel_rows(fit, rows.H);
}

double training_loss(const RegressionFit& fit, const Mlp& net, const Vector& y,
                     NtkAlgorithm choice) {
    const Vector pred = fit.train_predictions.size() == y.size()
                            ? fit.train_predictions
                            : predict(fit, net, fit.train.nodes, choice);
    return (fit.train.weights.array() * (y - pred).array().square()).sum();
}

ProjectionReport projection_diagnostics(const Vector& f_train, const Vector& ntk_train_pred,
                                        const Vector& ck_train_pred, const WeightedGrid& grid) {
    ProjectionReport report;
    report.f_norm = weighted_norm(f_train, grid);
    report.projection_norm = weighted_norm(ntk_train_pred, grid);
    report.residual_ntk = weighted_norm(f_train - ntk_train_pred, grid);
    report.residual_ck = weighted_norm(f_train - ck_train_pred, grid);
    report.split_lhs = report.f_norm * report.f_norm;
    report.split_rhs = report.projection_norm * report.projection_norm +
                       report.residual_ntk * report.residual_ntk;
    if (report.f_norm == 0.0) {
        report.beta = std::numeric_limits<double>::quiet_NaN();
        report.beta_defined = false;
    } else {
        report.beta = report.projection_norm / report.f_norm;
    }
    return report;
}

nlohmann::json fit_to_json(const RegressionFit& fit) {
    nlohmann::json j;
    j["form"] = to_string(fit.form);
    j["kernel"] = to_string(fit.kind);
    j["coefficients"] = std::vector<double>(fit.coeffs.data(), fit.coeffs.data() + fit.coeffs.size());
    j["rcond"] = fit.rcond;
    j["training_node_hash"] = node_hash(fit.train.nodes);
    if (fit.basis) {
        j["rank"] = fit.basis->rank;
        j["singular_values"] =
            std::vector<double>(fit.basis->singular_values.data(),
                                fit.basis->singular_values.data() + fit.basis->singular_values.size());
    }
    return j;
}

}  // namespace kslab
