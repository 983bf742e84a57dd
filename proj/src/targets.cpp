#include "kslab/targets.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kslab {

namespace {

const std::vector<RegressionTarget>& regression_registry() {
    static const std::vector<RegressionTarget> targets = {
        {"f1", [](double x) { return std::exp(std::sin(2.0 * std::numbers::pi * x)); }, -1.0, 1.0},
        {"f2", [](double x) { return std::exp(3.0 * x); }, -1.0, 1.0},
        {"f3", [](double x) { return std::cos(std::exp(3.0 * x)); }, -1.0, 1.0},
    };
    return targets;
}

const std::vector<ClassificationTarget>& classification_registry() {
    static const std::vector<ClassificationTarget> targets = {
        {"F1", [](double x1, double x2) { return 4.0 * x1 * x1 - 3.0 * x1 + 5.0 * x2 - 1.0; }},
        {"F2",
         [](double x1, double x2) {
             return 2.0 * x1 * x1 * x1 - 0.6 * x1 * x1 - 1.94 * x1 + x2 + 0.2;
         }},
    };
    return targets;
}

}  // namespace

const RegressionTarget& regression_target(const std::string& id) {
    for (const auto& t : regression_registry())
        if (t.name == id) return t;
    throw std::invalid_argument("unknown regression target: " + id);
}

const ClassificationTarget& classification_target(const std::string& id) {
    for (const auto& t : classification_registry())
        if (t.name == id) return t;
    throw std::invalid_argument("unknown classification target: " + id);
}

bool is_regression_target(const std::string& id) {
    for (const auto& t : regression_registry())
        if (t.name == id) return true;
    return false;
}

bool is_classification_target(const std::string& id) {
    for (const auto& t : classification_registry())
        if (t.name == id) return true;
    return false;
}

std::vector<std::string> regression_target_names() {
    std::vector<std::string> names;
    for (const auto& t : regression_registry()) names.push_back(t.name);
    return names;
}

std::vector<std::string> classification_target_names() {
    std::vector<std::string> names;
    for (const auto& t : classification_registry()) names.push_back(t.name);
    return names;
}

Vector sample_1d(const std::function<double(double)>& f, const Matrix& nodes) {
    if (nodes.rows() != 1) throw std::invalid_argument("sample_1d: nodes must be one-dimensional");
    Vector values(nodes.cols());
    for (Eigen::Index i = 0; i < nodes.cols(); ++i) values[i] = f(nodes(0, i));
    return values;
}

}  // namespace kslab
