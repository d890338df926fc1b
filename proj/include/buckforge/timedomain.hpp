#pragma once

#include <cstddef>
#include <vector>

#include "buckforge/lti.hpp"

namespace buckforge {

// Uniformly sampled scalar response.
struct Trajectory {
    std::vector<double> times;   // s
    std::vector<double> values;
    bool unstable = false;       // system had a pole with Re >= 0; the response may diverge
};

struct StepMetrics {
    double final_value = 0.0;
    double delay_time = 0.0;         // 50% of final value
    double rise_time = 0.0;          // 10% -> 90% of final value
    double settling_time = 0.0;      // last exit from the settling band
    double max_overshoot_pct = 0.0;
    double steady_state_error = 0.0; // reference - final_value
    double peak_time = 0.0;
    double peak_value = 0.0;
};

inline constexpr double kDefaultSettlingBand = 0.05;

// Unit-step response of a proper transfer function with deg(den) <= 3, sampled at
// dt = t_end / (samples - 1). Uses an exact zero-order-hold update so the samples carry
// no integration error.
Trajectory step_response(const TransferFunction& tf, double t_end, std::size_t samples);

// Throws NotSettled when the trailing 10% of the trajectory still moves by 1% of its mean.
StepMetrics step_metrics(const Trajectory& traj, double reference, double settling_band = kDefaultSettlingBand);

}  // namespace buckforge
