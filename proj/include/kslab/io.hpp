#pragma once

#include <string>
#include <vector>

#include "kslab/types.hpp"

namespace kslab {

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

// Gram CSV: header row of column-node indices, then one row per row-node,
// each prefixed with its index.
void write_gram_csv(const std::string& path, const Matrix& gram);
Matrix read_gram_csv(const std::string& path);

// Feature CSV: one row per node, columns phi_0..phi_{K-1}.
void write_feature_csv(const std::string& path, const Matrix& phi);

/// One node per row, comma-separated coordinates; an optional header line
/// is skipped. Returns nodes column-wise (d x n).
Matrix read_nodes_csv(const std::string& path);

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool scatter = false;
};

struct PlotOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
};

/// Fixed-viewport SVG with no timestamps, so identical inputs give
/// byte-identical files.
void write_svg_plot(const std::string& path, const std::vector<PlotSeries>& series,
                    const PlotOptions& options);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace kslab
