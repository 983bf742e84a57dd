#include "kslab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kslab {

std::string format_double(double value) {
    char buf[64];
    for (int precision : {15, 16, 17}) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
        if (std::strtod(buf, nullptr) == value) break;
    }
    return buf;
}

void write_gram_csv(const std::string& path, const Matrix& gram) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "node";
    for (Eigen::Index j = 0; j < gram.cols(); ++j) out << "," << j;
    out << "\n";
    for (Eigen::Index i = 0; i < gram.rows(); ++i) {
        out << i;
        for (Eigen::Index j = 0; j < gram.cols(); ++j) out << "," << format_double(gram(i, j));
        out << "\n";
    }
}

Matrix read_gram_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty gram csv: " + path);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool first = true;
        while (std::getline(ss, cell, ',')) {
            if (first) {
                first = false;  // row index column
                continue;
            }
            row.push_back(std::strtod(cell.c_str(), nullptr));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) return Matrix(0, 0);
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size())
            throw std::runtime_error("ragged gram csv: " + path);
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

void write_feature_csv(const std::string& path, const Matrix& phi) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "node";
    for (Eigen::Index k = 0; k < phi.rows(); ++k) out << ",phi_" << k;
    out << "\n";
    for (Eigen::Index j = 0; j < phi.cols(); ++j) {
        out << j;
        for (Eigen::Index k = 0; k < phi.rows(); ++k) out << "," << format_double(phi(k, j));
        out << "\n";
    }
}

Matrix read_nodes_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line.find_first_of("abcdefghijklmnopqrstuvwxyz") != std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("no nodes in " + path);
    Matrix nodes(rows[0].size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) throw std::runtime_error("ragged node csv: " + path);
        for (std::size_t d = 0; d < rows[i].size(); ++d) nodes(d, i) = rows[i][d];
    }
    return nodes;
}

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 560.0;
constexpr double kMarginLeft = 80.0;
constexpr double kMarginRight = 160.0;
constexpr double kMarginTop = 48.0;
constexpr double kMarginBottom = 64.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

}  // namespace

void write_svg_plot(const std::string& path, const std::vector<PlotSeries>& series,
                    const PlotOptions& options) {
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    bool have_point = false;
    auto usable = [&](double y) { return std::isfinite(y) && (!options.log_y || y > 0.0); };
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!usable(s.y[i]) || !std::isfinite(s.x[i])) continue;
            const double y = options.log_y ? std::log10(s.y[i]) : s.y[i];
            if (!have_point) {
                x_min = x_max = s.x[i];
                y_min = y_max = y;
                have_point = true;
            } else {
                x_min = std::min(x_min, s.x[i]);
                x_max = std::max(x_max, s.x[i]);
                y_min = std::min(y_min, y);
                y_max = std::max(y_max, y);
            }
        }
    if (!have_point) {
        x_min = y_min = 0.0;
        x_max = y_max = 1.0;
    }
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + 1.0;

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    auto px = [&](double x) { return kMarginLeft + (x - x_min) / (x_max - x_min) * plot_w; };
    auto py = [&](double y_raw) {
        const double y = options.log_y ? std::log10(y_raw) : y_raw;
        return kMarginTop + (y_max - y) / (y_max - y_min) * plot_h;
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << options.title << "</text>\n";

    // axes and ticks
    svg << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << plot_w
        << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
    const int ticks = 5;
    for (int t = 0; t <= ticks; ++t) {
        const double fx = x_min + (x_max - x_min) * t / ticks;
        svg << "<line x1=\"" << fmt_coord(px(fx)) << "\" y1=\"" << kMarginTop + plot_h
            << "\" x2=\"" << fmt_coord(px(fx)) << "\" y2=\"" << kMarginTop + plot_h + 6
            << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << fmt_coord(px(fx)) << "\" y=\"" << kMarginTop + plot_h + 22
            << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt_tick(fx) << "</text>\n";
        const double fy = y_min + (y_max - y_min) * t / ticks;
        const double fy_raw = options.log_y ? std::pow(10.0, fy) : fy;
        const double ypix = kMarginTop + (y_max - fy) / (y_max - y_min) * plot_h;
        svg << "<line x1=\"" << kMarginLeft - 6 << "\" y1=\"" << fmt_coord(ypix) << "\" x2=\""
            << kMarginLeft << "\" y2=\"" << fmt_coord(ypix) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << kMarginLeft - 10 << "\" y=\"" << fmt_coord(ypix + 4)
            << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_tick(fy_raw) << "</text>\n";
    }
    svg << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 16
        << "\" text-anchor=\"middle\" font-size=\"13\">" << options.x_label << "</text>\n";
    svg << "<text x=\"20\" y=\"" << kMarginTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 20 "
        << kMarginTop + plot_h / 2 << ")\">" << options.y_label
        << (options.log_y ? " (log scale)" : "") << "</text>\n";

    int color = 0;
    double legend_y = kMarginTop + 10.0;
    for (const auto& s : series) {
        const char* stroke = kPalette[color % (sizeof(kPalette) / sizeof(kPalette[0]))];
        ++color;
        if (s.scatter) {
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                if (!usable(s.y[i]) || !std::isfinite(s.x[i])) continue;
                svg << "<circle cx=\"" << fmt_coord(px(s.x[i])) << "\" cy=\""
                    << fmt_coord(py(s.y[i])) << "\" r=\"3\" fill=\"" << stroke
                    << "\" fill-opacity=\"0.7\"/>\n";
            }
        } else {
            svg << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                if (!usable(s.y[i]) || !std::isfinite(s.x[i])) continue;
                svg << fmt_coord(px(s.x[i])) << "," << fmt_coord(py(s.y[i])) << " ";
            }
            svg << "\"/>\n";
        }
        svg << "<rect x=\"" << kWidth - kMarginRight + 12 << "\" y=\"" << legend_y - 8
            << "\" width=\"12\" height=\"12\" fill=\"" << stroke << "\"/>\n";
        svg << "<text x=\"" << kWidth - kMarginRight + 30 << "\" y=\"" << legend_y + 2
            << "\" font-size=\"12\">" << s.label << "</text>\n";
        legend_y += 20.0;
    }
    svg << "</svg>\n";
    write_text_file(path, svg.str());
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
}

}  // namespace kslab
