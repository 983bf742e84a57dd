#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "kslab/types.hpp"

namespace kslab {

/// Nodes plus non-negative quadrature weights; (sum_i w_i g(x_i)^2)^(1/2)
/// is the discrete norm used for all train/test errors.
struct WeightedGrid {
    Matrix nodes;    // one column per node
    Vector weights;
    int size() const { return static_cast<int>(nodes.cols()); }
    void validate() const;
};

double weighted_norm(const Vector& values, const WeightedGrid& grid);
double weighted_inner(const Vector& a, const Vector& b, const WeightedGrid& grid);

/// Equispaced trapezoid grids on [a, b]. The test grid refines the training
/// grid by an integer factor tau >= 2 and shared nodes are bitwise equal;
/// endpoint weights are half the interior ones.
struct Grid1DPair {
    double a = -1.0;
    double b = 1.0;
    int n_train = 0;  // training intervals; n_train + 1 nodes
    int n_test = 0;   // test intervals = tau * n_train
    int tau = 0;
    WeightedGrid train;
    WeightedGrid test;
};

Grid1DPair make_grid_1d(double a, double b, int n_train, int n_test);

/// Plain 1D nodes at `factor` times the test resolution, for hypothesis
/// checks that need to look between grid points.
Matrix refine_1d(const Grid1DPair& pair, int factor);

/// Uniform rectangular grids on [a1,b1] x [a2,b2] with unit weights; node
/// (i, j) sits at column i*(n2+1)+j. Every training node is a test node.
struct Grid2DPair {
    double a1, b1, a2, b2;
    int n1 = 0, n2 = 0;  // training intervals per axis
    int m1 = 0, m2 = 0;  // test intervals per axis
    int tau1 = 0, tau2 = 0;
    double h = 0.0;  // training-cell diagonal
    WeightedGrid train;
    WeightedGrid test;

    int train_index(int i, int j) const { return i * (n2 + 1) + j; }
    int test_index(int k, int l) const { return k * (m2 + 1) + l; }
};

Grid2DPair make_grid_2d(double a1, double b1, double a2, double b2, int n1, int n2, int m1,
                        int m2);

Matrix refine_2d(const Grid2DPair& pair, int factor);

/// Binary labels over a grid pair, generated from a separating function F
/// via label = 1 iff F > 0. Explicit label vectors are accepted for
/// synthetic cases.
struct LabelField {
    std::function<double(double, double)> separator;  // may be empty
    IntVector train_labels;
    IntVector test_labels;
};

LabelField label_field(const std::function<double(double, double)>& separator,
                       const Grid2DPair& pair);
LabelField label_field_from_labels(IntVector train_labels, IntVector test_labels);

/// Training intervals [i, i+1] (by index) that enclose test index k on one
/// axis; two when the test node sits on a training grid line.
std::vector<int> enclosing_intervals(int test_idx, int tau, int n_train);

struct MatchingReport {
    bool holds = true;
    std::vector<std::pair<int, int>> violations;  // (k, l) test indices
};

/// True iff every test node has an enclosing training rectangle with at
/// least one corner of equal label.
MatchingReport check_matching_property(const LabelField& labels, const Grid2DPair& pair);

}  // namespace kslab
