#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kslab/types.hpp"

namespace kslab {

/// Built-in 1D regression targets on [-1, 1]:
///   f1(x) = exp(sin(2 pi x)), f2(x) = exp(3 x), f3(x) = cos(exp(3 x)).
struct RegressionTarget {
    std::string name;
    std::function<double(double)> f;
    double a = -1.0;
    double b = 1.0;
};

/// Built-in separating functions on [-1, 1]^2 for binary labels:
///   F1 = 4 x1^2 - 3 x1 + 5 x2 - 1,
///   F2 = 2 x1^3 - 0.6 x1^2 - 1.94 x1 + x2 + 0.2.
struct ClassificationTarget {
    std::string name;
    std::function<double(double, double)> separator;
};

const RegressionTarget& regression_target(const std::string& id);
const ClassificationTarget& classification_target(const std::string& id);
bool is_regression_target(const std::string& id);
bool is_classification_target(const std::string& id);
std::vector<std::string> regression_target_names();
std::vector<std::string> classification_target_names();

Vector sample_1d(const std::function<double(double)>& f, const Matrix& nodes);

}  // namespace kslab
