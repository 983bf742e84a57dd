#include "kslab/klog.hpp"

#include <cmath>
#include <stdexcept>

namespace kslab {

namespace {

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double loss_of(const Matrix& h, const Vector& alpha, const IntVector& labels) {
    const Vector t = h * alpha;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < t.size(); ++i)
        loss += softplus((1.0 - 2.0 * labels[i]) * t[i]);
    return loss;
}

}  // namespace

double logistic_loss(const Matrix& kernel_rows, const Vector& alpha, const IntVector& labels) {
    if (kernel_rows.cols() != alpha.size())
        throw std::invalid_argument("logistic_loss: coefficient count does not match kernel rows");
    if (kernel_rows.rows() != labels.size())
        throw std::invalid_argument("logistic_loss: label count does not match kernel rows");
    if (labels.size() > 0 && (labels.minCoeff() < 0 || labels.maxCoeff() > 1))
        throw std::invalid_argument("logistic_loss: labels must lie in {0,1}");
    return loss_of(kernel_rows, alpha, labels);
}

double logistic_loss_from_psi_hat(const Vector& psi_hat) {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < psi_hat.size(); ++i) loss += softplus(psi_hat[i]);
    return loss;
}

LogisticFit newton_fit(const KernelGram& gram, const IntVector& labels, double tol,
                       int max_iter) {
    const Matrix& h = gram.H;
    const Eigen::Index n = h.rows();
    if (h.cols() != n) throw std::invalid_argument("newton_fit: kernel matrix must be square");
    if (labels.size() != n) throw std::invalid_argument("newton_fit: label count mismatch");
    if ((h - h.transpose()).cwiseAbs().maxCoeff() >
        1e-10 * std::max(1.0, h.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("newton_fit: kernel matrix must be symmetric");

    LogisticFit fit;
    fit.kind = gram.kind;
    fit.train_nodes = gram.nodes_a;
    fit.alpha = Vector::Zero(n);

    const Vector chi = labels.cast<double>();
    double loss = loss_of(h, fit.alpha, labels);
    fit.loss_history.push_back(loss);
    for (int iter = 1; iter <= max_iter; ++iter) {
        const Vector t = h * fit.alpha;
        Vector p(n), variance(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            p[i] = sigmoid(t[i]);
            variance[i] = p[i] * (1.0 - p[i]);
        }
        const Vector grad = h.transpose() * (p - chi);
        fit.grad_norm = grad.lpNorm<Eigen::Infinity>();
        fit.iterations = iter - 1;
        if (fit.grad_norm <= tol) {
            fit.converged = true;
            fit.stop_reason = "gradient tolerance";
            return fit;
        }

        // The Hessian H'DH is singular whenever H is rank deficient, so a
        // small Levenberg shift keeps the step well posed.
        Matrix hessian = h.transpose() * variance.asDiagonal() * h;
        fit.damping = 1e-8 * hessian.trace() / static_cast<double>(n);
        hessian.diagonal().array() += fit.damping;
        const Vector step = Eigen::LDLT<Matrix>(hessian).solve(-grad);

        double scale = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 30; ++halving) {
            const Vector candidate = fit.alpha + scale * step;
            const double candidate_loss = loss_of(h, candidate, labels);
            if (candidate_loss < loss) {
                fit.alpha = candidate;
                loss = candidate_loss;
                fit.loss_history.push_back(loss);
                accepted = true;
                break;
            }
            scale /= 2.0;
        }
        if (!accepted) {
            fit.aborted = true;
            fit.stop_reason = "line search failed";
            fit.iterations = iter;
            return fit;
        }
        fit.iterations = iter;
    }
    fit.grad_norm = (h.transpose() * [&] {
                        const Vector t = h * fit.alpha;
                        Vector r(n);
                        for (Eigen::Index i = 0; i < n; ++i) r[i] = sigmoid(t[i]) - chi[i];
                        return r;
                    }())
                        .lpNorm<Eigen::Infinity>();
    if (fit.grad_norm <= tol) {
        fit.converged = true;
        fit.stop_reason = "gradient tolerance";
    } else {
        fit.stop_reason = "iteration cap";
    }
    return fit;
}

Vector decision_values_from_rows(const LogisticFit& fit, const Matrix& kernel_rows) {
    if (kernel_rows.cols() != fit.alpha.size())
        throw std::invalid_argument("kernel rows do not match the fitted coefficients");
    return kernel_rows * fit.alpha;
}

Vector decision_values(const LogisticFit& fit, const Mlp& net, const Matrix& nodes,
                       NtkAlgorithm choice) {
    const KernelGram rows =
        kernel_gram(net, fit.kind, nodes, fit.train_nodes, choice, fit.contraction);
    return decision_values_from_rows(fit, rows.H);
}

Vector predict_prob(const LogisticFit& fit, const Mlp& net, const Matrix& nodes,
                    NtkAlgorithm choice) {
    Vector psi = decision_values(fit, net, nodes, choice);
    for (Eigen::Index i = 0; i < psi.size(); ++i) psi[i] = sigmoid(psi[i]);
    return psi;
}

IntVector classify(const Vector& probabilities) {
    IntVector labels(probabilities.size());
    for (Eigen::Index i = 0; i < probabilities.size(); ++i)
        labels[i] = probabilities[i] > 0.5 ? 1 : 0;
    return labels;
}

double classification_accuracy(const Vector& probabilities, const IntVector& labels) {
    const IntVector predicted = classify(probabilities);
    long correct = 0;
    for (Eigen::Index i = 0; i < labels.size(); ++i)
        if (predicted[i] == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

PsiValues psi_values(const LogisticFit& fit, const Mlp& net, const Matrix& nodes,
                     const IntVector& labels, NtkAlgorithm choice) {
    if (labels.size() != nodes.cols())
        throw std::invalid_argument("psi_values: label count does not match nodes");
    PsiValues out;
    out.psi = decision_values(fit, net, nodes, choice);
    out.psi_hat.resize(out.psi.size());
    for (Eigen::Index i = 0; i < out.psi.size(); ++i)
        out.psi_hat[i] = (1.0 - 2.0 * labels[i]) * out.psi[i];
    return out;
}

nlohmann::json logistic_fit_to_json(const LogisticFit& fit) {
    nlohmann::json j;
    j["kernel"] = to_string(fit.kind);
    j["alpha"] = std::vector<double>(fit.alpha.data(), fit.alpha.data() + fit.alpha.size());
    j["iterations"] = fit.iterations;
    j["grad_norm"] = fit.grad_norm;
    j["damping"] = fit.damping;
    j["converged"] = fit.converged;
    j["aborted"] = fit.aborted;
    j["stop_reason"] = fit.stop_reason;
    j["training_node_hash"] = node_hash(fit.train_nodes);
    return j;
}

}  // namespace kslab
