#include "kslab/grids.hpp"

#include <cmath>
#include <stdexcept>

namespace kslab {

void WeightedGrid::validate() const {
    if (nodes.cols() < 2) throw std::invalid_argument("grid needs at least two nodes");
    if (weights.size() != nodes.cols())
        throw std::invalid_argument("grid weight count does not match node count");
    if ((weights.array() < 0.0).any()) throw std::invalid_argument("grid weights must be >= 0");
}

double weighted_norm(const Vector& values, const WeightedGrid& grid) {
    if (values.size() != grid.weights.size())
        throw std::invalid_argument("weighted_norm: value count does not match grid");
    return std::sqrt((grid.weights.array() * values.array().square()).sum());
}

double weighted_inner(const Vector& a, const Vector& b, const WeightedGrid& grid) {
    if (a.size() != grid.weights.size() || b.size() != grid.weights.size())
        throw std::invalid_argument("weighted_inner: value count does not match grid");
    return (grid.weights.array() * a.array() * b.array()).sum();
}

namespace {

Matrix equispaced_1d(double a, double b, int intervals) {
    Matrix nodes(1, intervals + 1);
    const double dx = (b - a) / intervals;
    for (int i = 0; i <= intervals; ++i) nodes(0, i) = a + i * dx;
    return nodes;
}

Vector trapezoid_weights(double dx, int intervals) {
    Vector w = Vector::Constant(intervals + 1, dx);
    w[0] = dx / 2.0;
    w[intervals] = dx / 2.0;
    return w;
}

}  // namespace

Grid1DPair make_grid_1d(double a, double b, int n_train, int n_test) {
    if (!(a < b)) throw std::invalid_argument("grid interval must satisfy a < b");
    if (n_train < 1 || n_test < 1) throw std::invalid_argument("grid needs at least one interval");
    if (n_test % n_train != 0 || n_test / n_train < 2)
        throw std::invalid_argument("test intervals must be an integer multiple >= 2 of training intervals");

    Grid1DPair pair;
    pair.a = a;
    pair.b = b;
    pair.n_train = n_train;
    pair.n_test = n_test;
    pair.tau = n_test / n_train;

    pair.test.nodes = equispaced_1d(a, b, n_test);
    pair.test.weights = trapezoid_weights((b - a) / n_test, n_test);

    // Training nodes are taken from the test grid so shared nodes coincide
    // bitwise rather than up to rounding.
    pair.train.nodes.resize(1, n_train + 1);
    for (int j = 0; j <= n_train; ++j) pair.train.nodes(0, j) = pair.test.nodes(0, j * pair.tau);
    pair.train.weights = trapezoid_weights((b - a) / n_train, n_train);
    return pair;
}

Matrix refine_1d(const Grid1DPair& pair, int factor) {
    if (factor < 1) throw std::invalid_argument("refine_1d: factor must be >= 1");
    return equispaced_1d(pair.a, pair.b, pair.n_test * factor);
}

Grid2DPair make_grid_2d(double a1, double b1, double a2, double b2, int n1, int n2, int m1,
                        int m2) {
    if (!(a1 < b1) || !(a2 < b2)) throw std::invalid_argument("grid rectangle must be non-empty");
    if (n1 < 1 || n2 < 1) throw std::invalid_argument("grid needs at least one interval per axis");
    if (m1 % n1 != 0 || m1 / n1 < 2 || m2 % n2 != 0 || m2 / n2 < 2)
        throw std::invalid_argument("test intervals must be an integer multiple >= 2 of training intervals");

    Grid2DPair pair;
    pair.a1 = a1;
    pair.b1 = b1;
    pair.a2 = a2;
    pair.b2 = b2;
    pair.n1 = n1;
    pair.n2 = n2;
    pair.m1 = m1;
    pair.m2 = m2;
    pair.tau1 = m1 / n1;
    pair.tau2 = m2 / n2;
    const double dx1 = (b1 - a1) / n1;
    const double dx2 = (b2 - a2) / n2;
    pair.h = std::sqrt(dx1 * dx1 + dx2 * dx2);

    const Matrix ax1 = equispaced_1d(a1, b1, m1);
    const Matrix ax2 = equispaced_1d(a2, b2, m2);
    pair.test.nodes.resize(2, (m1 + 1) * (m2 + 1));
    for (int k = 0; k <= m1; ++k)
        for (int l = 0; l <= m2; ++l) {
            pair.test.nodes(0, pair.test_index(k, l)) = ax1(0, k);
            pair.test.nodes(1, pair.test_index(k, l)) = ax2(0, l);
        }
    pair.test.weights = Vector::Ones(pair.test.nodes.cols());

    pair.train.nodes.resize(2, (n1 + 1) * (n2 + 1));
    for (int i = 0; i <= n1; ++i)
        for (int j = 0; j <= n2; ++j)
            pair.train.nodes.col(pair.train_index(i, j)) =
                pair.test.nodes.col(pair.test_index(i * pair.tau1, j * pair.tau2));
    pair.train.weights = Vector::Ones(pair.train.nodes.cols());
    return pair;
}

Matrix refine_2d(const Grid2DPair& pair, int factor) {
    if (factor < 1) throw std::invalid_argument("refine_2d: factor must be >= 1");
    const int f1 = pair.m1 * factor;
    const int f2 = pair.m2 * factor;
    const Matrix ax1 = equispaced_1d(pair.a1, pair.b1, f1);
    const Matrix ax2 = equispaced_1d(pair.a2, pair.b2, f2);
    Matrix nodes(2, (f1 + 1) * (f2 + 1));
    for (int k = 0; k <= f1; ++k)
        for (int l = 0; l <= f2; ++l) {
            nodes(0, k * (f2 + 1) + l) = ax1(0, k);
            nodes(1, k * (f2 + 1) + l) = ax2(0, l);
        }
    return nodes;
}

LabelField label_field(const std::function<double(double, double)>& separator,
                       const Grid2DPair& pair) {
    LabelField field;
    field.separator = separator;
    auto assign = [&](const Matrix& nodes) {
        IntVector labels(nodes.cols());
        for (Eigen::Index i = 0; i < nodes.cols(); ++i)
            labels[i] = separator(nodes(0, i), nodes(1, i)) > 0.0 ? 1 : 0;
        return labels;
    };
    field.train_labels = assign(pair.train.nodes);
    field.test_labels = assign(pair.test.nodes);
    return field;
}

LabelField label_field_from_labels(IntVector train_labels, IntVector test_labels) {
    LabelField field;
    field.train_labels = std::move(train_labels);
    field.test_labels = std::move(test_labels);
    return field;
}

std::vector<int> enclosing_intervals(int test_idx, int tau, int n_train) {
    std::vector<int> out;
    const int q = test_idx / tau;
    if (test_idx % tau == 0) {
        if (q - 1 >= 0) out.push_back(q - 1);
        if (q <= n_train - 1) out.push_back(q);
    } else {
        out.push_back(q);
    }
    return out;
}

MatchingReport check_matching_property(const LabelField& labels, const Grid2DPair& pair) {
    MatchingReport report;
    for (int k = 0; k <= pair.m1; ++k) {
        const auto rows = enclosing_intervals(k, pair.tau1, pair.n1);
        for (int l = 0; l <= pair.m2; ++l) {
            const int want = labels.test_labels[pair.test_index(k, l)];
            bool matched = false;
            for (int i : rows) {
                for (int j : enclosing_intervals(l, pair.tau2, pair.n2)) {
                    if (labels.train_labels[pair.train_index(i, j)] == want ||
                        labels.train_labels[pair.train_index(i + 1, j)] == want ||
                        labels.train_labels[pair.train_index(i, j + 1)] == want ||
                        labels.train_labels[pair.train_index(i + 1, j + 1)] == want) {
                        matched = true;
                        break;
                    }
                }
                if (matched) break;
            }
            if (!matched) {
                report.holds = false;
                report.violations.emplace_back(k, l);
            }
        }
    }
    return report;
}

}  // namespace kslab
