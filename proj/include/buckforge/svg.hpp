#pragma once

#include <string>
#include <vector>

#include "buckforge/lti.hpp"

namespace buckforge::svg {

// Two stacked panels (magnitude over phase) on a log-frequency axis, with the 0 dB and
// -180 deg reference lines and markers at the gain and phase crossovers.
std::string bode_plot(const std::vector<FrequencyPoint>& sweep, const MarginReport& margins, const std::string& title);

struct Series {
    std::string label;
    std::vector<double> values;
};

// Single-panel linear-axis line plot of one or more series against x.
std::string line_plot(const std::string& title, const std::string& x_label, const std::vector<double>& x,
                      const std::vector<Series>& series);

}  // namespace buckforge::svg
