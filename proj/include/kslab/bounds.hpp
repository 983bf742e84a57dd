#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kslab/klog.hpp"
#include "kslab/kreg.hpp"

namespace kslab {

/// One verified inequality: both sides as computed, the constants that went
/// into the right side, and the hypothesis flags it is conditional on.
/// `satisfied` is lhs <= rhs + 1e-10 * max(1, rhs). Reports whose
/// hypotheses failed (or that are not applicable, e.g. a 1/(1-beta) factor
/// with beta ~ 1) still carry their values but make no claim.
struct BoundReport {
    std::string id;
    double lhs = 0.0;
    double rhs = 0.0;
    std::map<std::string, double> constants;
    std::map<std::string, bool> hypotheses;
    bool hypothesis_met = true;
    bool estimated_constants = false;  // rhs uses estimated Lipschitz constants
    bool applicable = true;
    bool caveat = false;  // e.g. a non-converged Newton solve feeds the numbers
    bool satisfied = false;
    double slack = 0.0;  // rhs - lhs
    std::string note;
};

BoundReport make_bound_report(std::string id, double lhs, double rhs);

/// An unexplained violation is a failed report whose hypotheses held and
/// that was applicable.
bool unexplained_violation(const BoundReport& report);

// Hypothesis checks shared by the suites and their tests.
struct MonotonicityCheck {
    bool monotone = true;
    int violating_intervals = 0;
};

/// Sign-constancy of successive differences within every block of
/// `per_interval` steps; values sampled on an oversampled uniform grid.
MonotonicityCheck check_piecewise_monotone(const Vector& fine_values, int per_interval);

double estimate_lipschitz_1d(const Vector& fine_values, double dx);

/// Max gradient magnitude over forward-difference cells of a row-major
/// (rows1+1) x (rows2+1) lattice of values.
double estimate_lipschitz_2d(const Vector& fine_values, int rows1, int rows2, double dx1,
                             double dx2);

/// True iff every test node admits an enclosing training rectangle whose
/// corner values dominate it (up to a relative 1e-9 rounding allowance).
bool corner_max_holds(const Vector& psi_hat_train, const Vector& psi_hat_test,
                      const Grid2DPair& pair);

/// Evaluates every train/test inequality the regression analysis provides
/// for a pair of kernel fits: norm transfers in both directions (with
/// monotone and Lipschitz hypotheses), the training-loss ordering, the
/// projection bounds through beta, and the two-sided test-error
/// equivalences. Residuals and hypotheses are checked on a 10x oversampled
/// grid.
std::vector<BoundReport> regression_bound_suite(const std::function<double(double)>& f,
                                                const Mlp& net, const RegressionFit& ntk_fit,
                                                const RegressionFit& ck_fit,
                                                const KernelGram& ntk_train_gram,
                                                const Grid1DPair& pair);

/// The classification counterpart: training-loss ordering, train-in-test
/// nesting, the inflation factor omega, corner-max and Lipschitz transfer
/// lemmas, and the two-sided test-loss equivalences.
std::vector<BoundReport> logistic_bound_suite(const Mlp& net, const LogisticFit& ntk_fit,
                                              const LogisticFit& ck_fit, const LabelField& labels,
                                              const Grid2DPair& pair);

nlohmann::json bound_report_to_json(const BoundReport& report);
std::string bound_table(const std::vector<BoundReport>& reports);

}  // namespace kslab
