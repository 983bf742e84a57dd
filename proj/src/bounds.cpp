#include "kslab/bounds.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "kslab/targets.hpp"

namespace kslab {

BoundReport make_bound_report(std::string id, double lhs, double rhs) {
    BoundReport report;
    report.id = std::move(id);
    report.lhs = lhs;
    report.rhs = rhs;
    report.slack = rhs - lhs;
    report.satisfied = lhs <= rhs + 1e-10 * std::max(1.0, rhs);
    return report;
}

bool unexplained_violation(const BoundReport& report) {
    return report.applicable && report.hypothesis_met && !report.satisfied;
}

MonotonicityCheck check_piecewise_monotone(const Vector& fine_values, int per_interval) {
    MonotonicityCheck check;
    if (per_interval < 1 || (fine_values.size() - 1) % per_interval != 0)
        throw std::invalid_argument("check_piecewise_monotone: values do not tile the intervals");
    const Eigen::Index blocks = (fine_values.size() - 1) / per_interval;
    for (Eigen::Index blk = 0; blk < blocks; ++blk) {
        bool up = false, down = false;
        for (int s = 0; s < per_interval; ++s) {
            const double diff =
                fine_values[blk * per_interval + s + 1] - fine_values[blk * per_interval + s];
            if (diff > 0.0) up = true;
            if (diff < 0.0) down = true;
        }
        if (up && down) {
            check.monotone = false;
            ++check.violating_intervals;
        }
    }
    return check;
}

double estimate_lipschitz_1d(const Vector& fine_values, double dx) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i + 1 < fine_values.size(); ++i)
        worst = std::max(worst, std::abs(fine_values[i + 1] - fine_values[i]) / dx);
    return worst;
}

double estimate_lipschitz_2d(const Vector& fine_values, int rows1, int rows2, double dx1,
                             double dx2) {
    if (fine_values.size() != static_cast<Eigen::Index>(rows1 + 1) * (rows2 + 1))
        throw std::invalid_argument("estimate_lipschitz_2d: value count does not match lattice");
    auto at = [&](int k, int l) { return fine_values[k * (rows2 + 1) + l]; };
    double worst = 0.0;
    for (int k = 0; k < rows1; ++k)
        for (int l = 0; l < rows2; ++l) {
            const double gx = (at(k + 1, l) - at(k, l)) / dx1;
            const double gy = (at(k, l + 1) - at(k, l)) / dx2;
            worst = std::max(worst, std::sqrt(gx * gx + gy * gy));
        }
    return worst;
}

bool corner_max_holds(const Vector& psi_hat_train, const Vector& psi_hat_test,
                      const Grid2DPair& pair) {
    for (int k = 0; k <= pair.m1; ++k) {
        const auto rows = enclosing_intervals(k, pair.tau1, pair.n1);
        for (int l = 0; l <= pair.m2; ++l) {
            const double value = psi_hat_test[pair.test_index(k, l)];
            // Shared nodes are re-evaluated through a separate Gram product,
            // so allow last-digit rounding when comparing against corners.
            const double allowance = 1e-9 * (1.0 + std::abs(value));
            bool dominated = false;
            for (int i : rows) {
                for (int j : enclosing_intervals(l, pair.tau2, pair.n2)) {
                    const double corner_max =
                        std::max({psi_hat_train[pair.train_index(i, j)],
                                  psi_hat_train[pair.train_index(i + 1, j)],
                                  psi_hat_train[pair.train_index(i, j + 1)],
                                  psi_hat_train[pair.train_index(i + 1, j + 1)]});
                    if (value <= corner_max + allowance) {
                        dominated = true;
                        break;
                    }
                }
                if (dominated) break;
            }
            if (!dominated) return false;
        }
    }
    return true;
}

namespace {

constexpr double kBetaLimit = 1.0 - 1e-9;

void add_constant(BoundReport& report, const std::string& name, double value) {
    report.constants[name] = value;
}

}  // namespace

std::vector<BoundReport> regression_bound_suite(const std::function<double(double)>& f,
                                                const Mlp& net, const RegressionFit& ntk_fit,
                                                const RegressionFit& ck_fit,
                                                const KernelGram& ntk_train_gram,
                                                const Grid1DPair& pair) {
    const double tau = pair.tau;
    const double span = pair.b - pair.a;
    const int oversample = 10;
    const Matrix fine_nodes = refine_1d(pair, oversample);
    const double fine_dx = span / (pair.n_test * oversample);
    const int fine_per_train = pair.tau * oversample;

    const Vector f_train = sample_1d(f, pair.train.nodes);
    const Vector f_test = sample_1d(f, pair.test.nodes);
    const Vector f_fine = sample_1d(f, fine_nodes);

    struct KernelSide {
        std::string tag;
        Vector g_train, g_test, g_fine;
        double norm0 = 0.0, norm1 = 0.0;
        MonotonicityCheck mono;
        double lipschitz = 0.0;
        Vector pred_train;
    };
    auto evaluate = [&](const RegressionFit& fit, const std::string& tag) {
        KernelSide side;
        side.tag = tag;
        side.pred_train = fit.train_predictions;
        side.g_train = f_train - side.pred_train;
        side.g_test = f_test - predict(fit, net, pair.test.nodes);
        side.g_fine = f_fine - predict(fit, net, fine_nodes);
        side.norm0 = weighted_norm(side.g_train, pair.train);
        side.norm1 = weighted_norm(side.g_test, pair.test);
        side.mono = check_piecewise_monotone(side.g_fine, fine_per_train);
        side.lipschitz = estimate_lipschitz_1d(side.g_fine, fine_dx);
        return side;
    };
    const KernelSide ntk = evaluate(ntk_fit, "ntk");
    const KernelSide ck = evaluate(ck_fit, "ck");

    const ProjectionReport projection =
        projection_diagnostics(f_train, ntk.pred_train, ck.pred_train, pair.train);
    const double beta = projection.beta;
    const bool beta_usable = projection.beta_defined && beta < kBetaLimit;

    std::vector<BoundReport> reports;

    for (const KernelSide* side : {&ntk, &ck}) {
        {
            auto r = make_bound_report("norm_coarse_from_fine[" + side->tag + "]", side->norm0,
                                       std::sqrt(tau) * side->norm1);
            add_constant(r, "tau", tau);
            reports.push_back(std::move(r));
        }
        {
            auto r = make_bound_report("norm_fine_from_coarse_monotone[" + side->tag + "]",
                                       side->norm1, std::sqrt(2.0) * side->norm0);
            r.hypotheses["residual_monotone_per_interval"] = side->mono.monotone;
            r.hypothesis_met = side->mono.monotone;
            if (!side->mono.monotone) {
                std::ostringstream note;
                note << side->mono.violating_intervals << " training intervals violate monotonicity";
                r.note = note.str();
            }
            reports.push_back(std::move(r));
        }
        {
            const double extra =
                2.0 * span * span * side->lipschitz * side->lipschitz / (pair.n_train * (double)pair.n_train);
            auto r = make_bound_report("norm_fine_from_coarse_lipschitz[" + side->tag + "]",
                                       side->norm1 * side->norm1,
                                       4.0 * (side->norm0 * side->norm0 + extra));
            add_constant(r, "lipschitz_estimate", side->lipschitz);
            r.estimated_constants = true;
            reports.push_back(std::move(r));
        }
    }

    {
        auto r = make_bound_report("train_residual_ordering", ntk.norm0, ck.norm0);
        reports.push_back(std::move(r));
    }

    {
        // Left side is the projection of the CK residual onto the NTK span,
        // evaluated by refitting the residual.
        const RegressionFit residual_fit =
            fit_kernel_form(ntk_train_gram, pair.train, ck.g_train, ntk_fit.rcond);
        const Vector& projected = residual_fit.train_predictions;
        auto r = make_bound_report("projected_ck_residual",
                                   weighted_norm(projected, pair.train),
                                   (projection.beta_defined ? beta : 0.0) * ck.norm0);
        add_constant(r, "beta", beta);
        r.applicable = projection.beta_defined;
        if (!projection.beta_defined) r.note = "target has zero training norm; beta undefined";
        reports.push_back(std::move(r));
    }

    {
        auto r = make_bound_report("train_residual_reverse_ordering", ck.norm0,
                                   beta_usable ? ntk.norm0 / (1.0 - beta) : 0.0);
        add_constant(r, "beta", beta);
        r.applicable = beta_usable;
        if (!beta_usable) r.note = "beta too close to 1; 1/(1-beta) bound not applicable";
        reports.push_back(std::move(r));
    }

    const bool both_monotone = ntk.mono.monotone && ck.mono.monotone;
    {
        const double c1 = std::sqrt(2.0 * tau);
        auto r = make_bound_report("test_equivalence_monotone_lower", ntk.norm1, c1 * ck.norm1);
        add_constant(r, "C1", c1);
        add_constant(r, "tau", tau);
        add_constant(r, "beta", beta);
        r.hypotheses["residuals_monotone"] = both_monotone;
        r.hypotheses["beta_below_one"] = beta_usable;
        r.hypothesis_met = both_monotone && beta_usable;
        reports.push_back(std::move(r));
    }
    {
        const double c2 = beta_usable ? std::sqrt(2.0 * tau) / (1.0 - beta) : 0.0;
        auto r = make_bound_report("test_equivalence_monotone_upper", ck.norm1, c2 * ntk.norm1);
        add_constant(r, "C2", c2);
        add_constant(r, "tau", tau);
        add_constant(r, "beta", beta);
        r.hypotheses["residuals_monotone"] = both_monotone;
        r.hypotheses["beta_below_one"] = beta_usable;
        r.hypothesis_met = both_monotone && beta_usable;
        r.applicable = beta_usable;
        if (!beta_usable) r.note = "beta too close to 1; 1/(1-beta) bound not applicable";
        reports.push_back(std::move(r));
    }
    {
        const double d1 = 4.0 * tau;
        const double extra = 8.0 * span * span * ntk.lipschitz * ntk.lipschitz /
                             (pair.n_train * (double)pair.n_train);
        auto r = make_bound_report("test_equivalence_lipschitz_ntk", ntk.norm1 * ntk.norm1,
                                   d1 * ck.norm1 * ck.norm1 + extra);
        add_constant(r, "D1", d1);
        add_constant(r, "lipschitz_ntk", ntk.lipschitz);
        add_constant(r, "beta", beta);
        r.hypotheses["beta_below_one"] = beta_usable;
        r.hypothesis_met = beta_usable;
        r.estimated_constants = true;
        reports.push_back(std::move(r));
    }
    {
        const double d2 = beta_usable ? 4.0 * tau / ((1.0 - beta) * (1.0 - beta)) : 0.0;
        const double extra =
            8.0 * span * span * ck.lipschitz * ck.lipschitz / (pair.n_train * (double)pair.n_train);
        auto r = make_bound_report("test_equivalence_lipschitz_ck", ck.norm1 * ck.norm1,
                                   d2 * ntk.norm1 * ntk.norm1 + extra);
        add_constant(r, "D2", d2);
        add_constant(r, "lipschitz_ck", ck.lipschitz);
        add_constant(r, "beta", beta);
        r.hypotheses["beta_below_one"] = beta_usable;
        r.hypothesis_met = beta_usable;
        r.estimated_constants = true;
        r.applicable = beta_usable;
        if (!beta_usable) r.note = "beta too close to 1; 1/(1-beta) bound not applicable";
        reports.push_back(std::move(r));
    }

    for (auto& r : reports) add_constant(r, "n_train", pair.n_train);
    return reports;
}

std::vector<BoundReport> logistic_bound_suite(const Mlp& net, const LogisticFit& ntk_fit,
                                              const LogisticFit& ck_fit, const LabelField& labels,
                                              const Grid2DPair& pair) {
    const double tau12 = static_cast<double>(pair.tau1) * pair.tau2;
    // The orderings need the tangent-kernel loss to be the attained minimum;
    // a capped last-layer solve only overestimates its own side and keeps
    // every inequality direction valid.
    const bool converged = ntk_fit.converged;
    const int oversample = 10;
    const Matrix fine_nodes = refine_2d(pair, oversample);
    const int fine1 = pair.m1 * oversample;
    const int fine2 = pair.m2 * oversample;
    const double fine_dx1 = (pair.b1 - pair.a1) / fine1;
    const double fine_dx2 = (pair.b2 - pair.a2) / fine2;

    struct KernelSide {
        std::string tag;
        double loss_train = 0.0, loss_test = 0.0;
        Vector psi_hat_train, psi_hat_test;
        bool corner_max = false;
        double lipschitz = 0.0;
    };
    auto evaluate = [&](const LogisticFit& fit, const std::string& tag) {
        KernelSide side;
        side.tag = tag;
        const PsiValues train = psi_values(fit, net, pair.train.nodes, labels.train_labels);
        const PsiValues test = psi_values(fit, net, pair.test.nodes, labels.test_labels);
        side.psi_hat_train = train.psi_hat;
        side.psi_hat_test = test.psi_hat;
        side.loss_train = logistic_loss_from_psi_hat(train.psi_hat);
        side.loss_test = logistic_loss_from_psi_hat(test.psi_hat);
        side.corner_max = corner_max_holds(train.psi_hat, test.psi_hat, pair);
        const Vector psi_fine = decision_values(fit, net, fine_nodes);
        side.lipschitz = estimate_lipschitz_2d(psi_fine, fine1, fine2, fine_dx1, fine_dx2);
        return side;
    };
    const KernelSide ntk = evaluate(ntk_fit, "ntk");
    const KernelSide ck = evaluate(ck_fit, "ck");

    double log_omega = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ntk.psi_hat_train.size(); ++i)
        log_omega = std::max(log_omega, ck.psi_hat_train[i] - ntk.psi_hat_train[i]);
    const double omega = std::exp(log_omega);

    const bool matching = check_matching_property(labels, pair).holds;

    std::vector<BoundReport> reports;
    auto flag_convergence = [&](BoundReport& r) {
        r.caveat = !converged;
        if (!converged)
            r.note = "the tangent-kernel Newton solve did not reach the gradient tolerance";
    };

    {
        auto r = make_bound_report("train_loss_ordering", ntk.loss_train, ck.loss_train);
        flag_convergence(r);
        reports.push_back(std::move(r));
    }
    for (const KernelSide* side : {&ntk, &ck}) {
        auto r = make_bound_report("train_loss_within_test[" + side->tag + "]", side->loss_train,
                                   side->loss_test);
        reports.push_back(std::move(r));
    }
    {
        auto r = make_bound_report("train_inflation_at_least_one", 1.0, omega);
        add_constant(r, "omega", omega);
        add_constant(r, "log_omega", log_omega);
        flag_convergence(r);
        reports.push_back(std::move(r));
    }
    {
        auto r = make_bound_report("train_loss_reverse_ordering", ck.loss_train,
                                   omega * ntk.loss_train);
        add_constant(r, "omega", omega);
        flag_convergence(r);
        reports.push_back(std::move(r));
    }
    for (const KernelSide* side : {&ntk, &ck}) {
        {
            auto r = make_bound_report("test_loss_from_train_cornermax[" + side->tag + "]",
                                       side->loss_test, tau12 * side->loss_train);
            add_constant(r, "tau1_tau2", tau12);
            r.hypotheses["corner_max"] = side->corner_max;
            r.hypothesis_met = side->corner_max;
            reports.push_back(std::move(r));
        }
        {
            const double factor = std::exp(pair.h * side->lipschitz) * tau12;
            auto r = make_bound_report("test_loss_from_train_lipschitz[" + side->tag + "]",
                                       side->loss_test, factor * side->loss_train);
            add_constant(r, "h", pair.h);
            add_constant(r, "lipschitz_estimate", side->lipschitz);
            add_constant(r, "tau1_tau2", tau12);
            r.hypotheses["matching_property"] = matching;
            r.hypothesis_met = matching;
            r.estimated_constants = true;
            reports.push_back(std::move(r));
        }
    }

    const bool both_corner_max = ntk.corner_max && ck.corner_max;
    {
        auto r = make_bound_report("test_equivalence_cornermax_lower", ntk.loss_test,
                                   tau12 * ck.loss_test);
        add_constant(r, "C1", tau12);
        r.hypotheses["corner_max_both"] = both_corner_max;
        r.hypothesis_met = both_corner_max;
        flag_convergence(r);
        reports.push_back(std::move(r));
    }
    {
        const double c2 = tau12 * omega;
        auto r = make_bound_report("test_equivalence_cornermax_upper", ck.loss_test,
                                   c2 * ntk.loss_test);
        add_constant(r, "C2", c2);
        add_constant(r, "omega", omega);
        r.hypotheses["corner_max_both"] = both_corner_max;
        r.hypothesis_met = both_corner_max;
        flag_convergence(r);
        reports.push_back(std::move(r));
    }
    {
        const double d1 = std::exp(pair.h * ntk.lipschitz);
        auto r = make_bound_report("test_equivalence_lipschitz_lower", ntk.loss_test,
                                   d1 * ck.loss_test);
        add_constant(r, "D1", d1);
        add_constant(r, "h", pair.h);
        add_constant(r, "lipschitz_ntk", ntk.lipschitz);
        r.hypotheses["matching_property"] = matching;
        r.hypothesis_met = matching;
        r.estimated_constants = true;
        flag_convergence(r);
        reports.push_back(std::move(r));
    }
    {
        const double d2 = omega * std::exp(pair.h * ck.lipschitz);
        auto r = make_bound_report("test_equivalence_lipschitz_upper", ck.loss_test,
                                   d2 * ntk.loss_test);
        add_constant(r, "D2", d2);
        add_constant(r, "h", pair.h);
        add_constant(r, "omega", omega);
        add_constant(r, "lipschitz_ck", ck.lipschitz);
        r.hypotheses["matching_property"] = matching;
        r.hypothesis_met = matching;
        r.estimated_constants = true;
        flag_convergence(r);
        reports.push_back(std::move(r));
    }

    for (auto& r : reports) {
        add_constant(r, "tau1", pair.tau1);
        add_constant(r, "tau2", pair.tau2);
    }
    return reports;
}

nlohmann::json bound_report_to_json(const BoundReport& report) {
    nlohmann::json j;
    j["id"] = report.id;
    j["lhs"] = report.lhs;
    j["rhs"] = report.rhs;
    j["constants"] = report.constants;
    j["hypotheses"] = report.hypotheses;
    j["hypothesis_met"] = report.hypothesis_met;
    j["estimated_constants"] = report.estimated_constants;
    j["applicable"] = report.applicable;
    j["caveat"] = report.caveat;
    j["satisfied"] = report.satisfied;
    j["slack"] = report.slack;
    if (!report.note.empty()) j["note"] = report.note;
    return j;
}

std::string bound_table(const std::vector<BoundReport>& reports) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-44s %14s %14s %5s %5s %s\n", "bound", "lhs", "rhs", "ok",
                  "hyp", "notes");
    out << line;
    for (const auto& r : reports) {
        std::string notes;
        if (!r.applicable) notes += "[not applicable] ";
        if (r.estimated_constants) notes += "[estimated constants] ";
        if (r.caveat) notes += "[caveat] ";
        notes += r.note;
        std::snprintf(line, sizeof(line), "%-44s %14.6e %14.6e %5s %5s %s\n", r.id.c_str(), r.lhs,
                      r.rhs, r.satisfied ? "yes" : "NO", r.hypothesis_met ? "yes" : "no",
                      notes.c_str());
        out << line;
    }
    return out.str();
}

}  // namespace kslab
