#pragma once

#include <string>
#include <vector>

// Minimal standalone SVG charts for the pipeline artifacts.

namespace sill::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

std::string line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                      const std::string& y_label);

std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                      const std::string& title, const std::string& y_label);

std::string histogram(const std::vector<double>& values, int bins, const std::string& title,
                      const std::string& x_label);

}  // namespace sill::svg
