#pragma once

#include <string>
#include <vector>

namespace mgtrap::scenario {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
};

/// Minimal log-log line plot; non-positive points are skipped.
std::string loglog_svg(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                       const std::string& y_label);

}  // namespace mgtrap::scenario
