#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ubsb::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// (fpr, tpr) points, one per distinct score, from (0,0) to (1,1).
Series roc_series(std::string name, std::span<const double> scores, std::span<const int> labels);

/// Line chart with axes, ticks and a legend. Deterministic text.
std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       std::span<const Series> series, std::pair<double, double> x_range,
                       std::pair<double, double> y_range, bool diagonal = false);

}  // namespace ubsb::svg
