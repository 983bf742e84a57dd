#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "kslab/klog.hpp"

using namespace kslab;

namespace {

KernelGram synthetic_gram(const Matrix& h, const Matrix& nodes) {
    KernelGram gram;
    gram.H = h;
    gram.kind = KernelKind::CK;
    gram.nodes_a = nodes;
    gram.nodes_b = nodes;
    gram.symmetric = true;
    return gram;
}

}  // namespace

TEST_SUITE_BEGIN("klog");

TEST_CASE("loss values") {
    SUBCASE("zero coefficients give ln 2 per node") {
        const Matrix h = Matrix::Identity(6, 6);
        IntVector labels(6);
        for (int i = 0; i < 6; ++i) labels[i] = i % 2;
        CHECK(logistic_loss(h, Vector::Zero(6), labels) ==
              doctest::Approx(6.0 * std::numbers::ln2).epsilon(1e-14));
    }
    SUBCASE("large correct margin underflows to zero without overflow") {
        Matrix h(1, 1);
        h << 40.0;
        Vector alpha(1);
        alpha << 1.0;
        IntVector labels(1);
        labels << 1;
        const double loss = logistic_loss(h, alpha, labels);
        CHECK(loss <= 1e-17);
        CHECK(loss >= 0.0);
    }
    SUBCASE("two-node closed form, decreasing in the margin") {
        const Matrix h = Matrix::Identity(2, 2);
        IntVector labels(2);
        labels << 1, 0;
        double previous = std::numeric_limits<double>::infinity();
        for (double t : {0.5, 1.0, 2.0, 5.0, 20.0}) {
            Vector alpha(2);
            alpha << t, -t;
            const double loss = logistic_loss(h, alpha, labels);
            CHECK(loss == doctest::Approx(2.0 * std::log1p(std::exp(-t))).epsilon(1e-12));
            CHECK(loss < previous);
            previous = loss;
        }
    }
    SUBCASE("labels outside {0,1} rejected") {
        IntVector labels(1);
        labels << 2;
        CHECK_THROWS_AS(logistic_loss(Matrix::Identity(1, 1), Vector::Zero(1), labels),
                        std::invalid_argument);
    }
}

TEST_CASE("newton fit drives all-zero labels below one half") {
    const Mlp net = init_mlp({1, 7, 1}, Activation::Tanh, 5);
    Matrix nodes(1, 5);
    nodes << -1.0, -0.5, 0.0, 0.5, 1.0;
    const KernelGram gram = ck_gram(net, nodes);
    const IntVector labels = IntVector::Zero(5);
    const LogisticFit fit = newton_fit(gram, labels);
    CHECK(fit.converged);
    for (std::size_t i = 1; i < fit.loss_history.size(); ++i)
        CHECK(fit.loss_history[i] < fit.loss_history[i - 1]);
    const Vector p = predict_prob(fit, net, nodes);
    for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p[i] < 0.5);
}

TEST_CASE("symmetric two-class problem has a zero midpoint decision value") {
    Matrix nodes(1, 4);
    nodes << -2.0, -1.0, 1.0, 2.0;
    Matrix h(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) h(i, j) = 1.0 + nodes(0, i) * nodes(0, j);
    IntVector labels(4);
    labels << 0, 0, 1, 1;
    const LogisticFit fit = newton_fit(synthetic_gram(h, nodes), labels);
    Matrix midpoint_rows(1, 4);
    for (int j = 0; j < 4; ++j) midpoint_rows(0, j) = 1.0;  // ker(0, x_j) = 1
    const Vector psi = decision_values_from_rows(fit, midpoint_rows);
    CHECK(std::abs(psi[0]) <= 1e-6);
}

TEST_CASE("separable data reaches full training accuracy") {
    const Mlp net = init_mlp({2, 12, 10, 2}, Activation::Tanh, 8);
    std::mt19937_64 rng(9);
    const Matrix nodes = test::random_inputs(2, 24, rng);
    IntVector labels(24);
    for (int i = 0; i < 24; ++i) labels[i] = nodes(0, i) + nodes(1, i) > 0.0 ? 1 : 0;
    const KernelGram gram = kernel_gram(net, KernelKind::NTK, nodes, NtkAlgorithm::Auto,
                                        class_difference_contraction());
    LogisticFit fit = newton_fit(gram, labels);
    fit.contraction = class_difference_contraction();
    const Vector p = predict_prob(fit, net, nodes);
    CHECK(classification_accuracy(p, labels) == 1.0);
    const IntVector predicted = classify(p);
    for (int i = 0; i < 24; ++i) CHECK(predicted[i] == labels[i]);
}

TEST_CASE("single-class labels push every probability to that class") {
    const Mlp net = init_mlp({1, 6, 1}, Activation::Tanh, 2);
    Matrix nodes(1, 6);
    nodes << -1.0, -0.6, -0.2, 0.2, 0.6, 1.0;
    const KernelGram gram = ck_gram(net, nodes);
    const LogisticFit fit = newton_fit(gram, IntVector::Ones(6));
    const Vector p = predict_prob(fit, net, nodes);
    for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p[i] > 0.5);
    CHECK(classification_accuracy(p, IntVector::Ones(6)) == 1.0);
}

TEST_CASE("probabilities: zero coefficients and range") {
    const Mlp net = init_mlp({1, 5, 1}, Activation::Tanh, 3);
    Matrix nodes(1, 4);
    nodes << -1.0, 0.0, 0.5, 1.0;
    LogisticFit fit;
    fit.kind = KernelKind::CK;
    fit.train_nodes = nodes;
    fit.alpha = Vector::Zero(4);
    const Vector p = predict_prob(fit, net, nodes);
    for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p[i] == 0.5);

    fit.alpha << 0.8, -1.3, 2.1, -0.4;
    const Vector q = predict_prob(fit, net, nodes);
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        CHECK(q[i] > 0.0);
        CHECK(q[i] < 1.0);
    }
    // extreme coefficients saturate but never leave [0, 1]
    fit.alpha << 5000.0, -8000.0, 12000.0, -2000.0;
    const Vector saturated = predict_prob(fit, net, nodes);
    for (Eigen::Index i = 0; i < saturated.size(); ++i) {
        CHECK(saturated[i] >= 0.0);
        CHECK(saturated[i] <= 1.0);
    }
}

TEST_CASE("label-signed decision values reproduce the loss") {
    const Mlp net = init_mlp({1, 8, 1}, Activation::Tanh, 6);
    Matrix nodes(1, 7);
    nodes << -0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9;
    IntVector labels(7);
    labels << 0, 0, 0, 1, 1, 1, 1;
    const KernelGram gram = ck_gram(net, nodes);
    const LogisticFit fit = newton_fit(gram, labels);

    const PsiValues values = psi_values(fit, net, nodes, labels);
    for (int i = 0; i < 7; ++i) {
        if (labels[i] == 0) CHECK(values.psi_hat[i] == values.psi[i]);
        if (labels[i] == 1) CHECK(values.psi_hat[i] == -values.psi[i]);
    }
    const double via_psi = logistic_loss_from_psi_hat(values.psi_hat);
    const double direct = logistic_loss(gram.H, fit.alpha, labels);
    CHECK(test::rel_close(via_psi, direct, 1e-10));
}

TEST_CASE("positive kernel rescaling leaves converged probabilities invariant") {
    // Non-separable on purpose: two features, twelve points, flipped labels,
    // so the minimizer is finite and Newton converges to machine precision.
    Matrix nodes(1, 12);
    Matrix phi(2, 12);
    IntVector labels(12);
    for (int i = 0; i < 12; ++i) {
        const double x = -1.0 + 2.0 * i / 11.0;
        nodes(0, i) = x;
        phi(0, i) = x;
        phi(1, i) = 1.0;
        labels[i] = x > 0.0 ? 1 : 0;
    }
    labels[2] = 1;  // flips make the classes overlap
    labels[9] = 0;
    const Matrix h = phi.transpose() * phi;
    const KernelGram gram = synthetic_gram(h, nodes);
    KernelGram scaled = gram;
    scaled.H *= 7.0;

    // The damping tracks trace(H'DH), so the scaled problem's Newton iterates
    // are the unscaled ones divided by 7; the gradient tolerance scales with
    // the kernel.
    const LogisticFit fit = newton_fit(gram, labels, 1e-8, 500);
    const LogisticFit fit_scaled = newton_fit(scaled, labels, 7.0 * 1e-8, 500);
    REQUIRE(fit.converged);
    REQUIRE(fit_scaled.converged);
    const Vector p = decision_values_from_rows(fit, gram.H);
    const Vector q = decision_values_from_rows(fit_scaled, scaled.H);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double prob = 1.0 / (1.0 + std::exp(-p[i]));
        const double prob_scaled = 1.0 / (1.0 + std::exp(-q[i]));
        CHECK(std::abs(prob - prob_scaled) <= 1e-8);
    }
    // coefficients absorb the kernel scale, up to where each solve stopped
    CHECK((7.0 * fit_scaled.alpha - fit.alpha).cwiseAbs().maxCoeff() <=
          1e-6 * std::max(1.0, fit.alpha.cwiseAbs().maxCoeff()));
}

TEST_CASE("tangent-kernel training loss does not exceed the last-layer one") {
    std::mt19937_64 rng(12);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Mlp net = init_mlp({2, 10, 8, 2}, Activation::Tanh, seed);
        const Matrix nodes = test::random_inputs(2, 16, rng);
        IntVector labels(16);
        for (int i = 0; i < 16; ++i)
            labels[i] = nodes(0, i) * nodes(0, i) + nodes(1, i) > 0.2 ? 1 : 0;
        const auto c = class_difference_contraction();
        const KernelGram ntk = kernel_gram(net, KernelKind::NTK, nodes, NtkAlgorithm::Auto, c);
        const KernelGram ck = kernel_gram(net, KernelKind::CK, nodes, NtkAlgorithm::Auto, c);
        const LogisticFit ntk_fit = newton_fit(ntk, labels);
        const LogisticFit ck_fit = newton_fit(ck, labels);
        if (!ntk_fit.converged || !ck_fit.converged) continue;
        const double tol = 1e-6 * 16;
        CHECK(logistic_loss(ntk.H, ntk_fit.alpha, labels) <=
              logistic_loss(ck.H, ck_fit.alpha, labels) + tol);
    }
}

TEST_CASE("iteration cap is reported") {
    const Mlp net = init_mlp({1, 6, 1}, Activation::Tanh, 4);
    Matrix nodes(1, 5);
    nodes << -1.0, -0.5, 0.0, 0.5, 1.0;
    IntVector labels(5);
    labels << 0, 1, 0, 1, 0;
    const LogisticFit fit = newton_fit(ck_gram(net, nodes), labels, 1e-16, 2);
    CHECK(fit.iterations <= 2);
    if (!fit.converged) CHECK(fit.stop_reason == "iteration cap");
}

TEST_CASE("log(1 + rho x) <= rho log(1 + x) for rho >= 1") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> rho_dist(1.0, 50.0);
    std::uniform_real_distribution<double> x_dist(0.0, 100.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const double rho = rho_dist(rng);
        const double x = x_dist(rng);
        CHECK(std::log1p(rho * x) <= rho * std::log1p(x) + 1e-12);
    }
}

TEST_SUITE_END();
