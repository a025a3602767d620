#pragma once

#include <string>
#include <utility>
#include <vector>

namespace hdiv::svg {

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    double width = 480.0;
    double height = 480.0;
};

/// Static Q-Q plot: points, the 45-degree line y = x and ticked axes.
/// Output depends only on the arguments.
std::string qq_plot(const std::vector<std::pair<double, double>>& points, const PlotSpec& spec);

/// Cross-validation curve on a log10 lambda axis with the chosen lambda marked.
std::string cv_curve_plot(const std::vector<double>& grid, const std::vector<double>& losses,
                          double chosen, const PlotSpec& spec);

/// About `count` round tick positions covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, int count = 5);

}  // namespace hdiv::svg
