#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "buckforge/converter_model.hpp"
#include "buckforge/lti.hpp"
#include "buckforge/timedomain.hpp"

namespace buckforge {

struct PIGains {
    double kp = 0.0;  // proportional gain
    double ki = 0.0;  // integral gain [1/s]

    bool operator==(const PIGains&) const = default;
};

// Throws InvalidParameter unless kp >= 0, ki >= 0 and not both zero.
PIGains validate_gains(const PIGains& g);

// Optional gains around the plant that are not part of the duty-to-output model itself.
struct LoopConfig {
    bool include_modulator_gain = false;  // divide the loop by the ramp peak vs
    bool include_sensor_gain = false;     // multiply the loop by vref / vo_target

    bool operator==(const LoopConfig&) const = default;
};

// (kp s + ki) / s, never cancelled.
TransferFunction pi_tf(const PIGains& g);

TransferFunction compensated_loop(const TransferFunction& plant, const PIGains& g, const LoopConfig& cfg,
                                  const ConverterParams& p);

struct TuneOptions {
    double kp_min = 1e-6;
    double kp_max = 1e3;
    int grid_points_per_decade = 20;
    double pm_tolerance_deg = 0.05;
    MarginOptions margins;
};

struct TuningResult {
    PIGains gains;
    MarginReport margins;
};

// Phase margin of the compensated loop, or nullopt when there is no gain crossover.
std::optional<double> phase_margin_for(const TransferFunction& plant, const PIGains& g, const LoopConfig& cfg,
                                       const ConverterParams& p, const MarginOptions& options = {});

// Searches kp (ki fixed) so that the loop phase margin equals target_pm. When several kp
// satisfy the target the largest one is returned. Throws TargetUnreachable.
TuningResult tune_kp_for_pm(const TransferFunction& plant, double ki, double target_pm, const LoopConfig& cfg,
                            const ConverterParams& p, const TuneOptions& options = {});

// Published figures for the two reference PI settings, kept alongside the computed values.
struct PublishedCase {
    std::string label;
    PIGains gains;
    double phase_margin_deg = 0.0;
    bool phase_margin_is_lower_bound = false;
    double gain_margin_db = 0.0;
    bool stable_claim = true;
};

std::optional<PublishedCase> published_case_for(const PIGains& g);

struct PublishedComparison {
    PublishedCase published;
    std::optional<double> computed_phase_margin_deg;
    double computed_gain_margin_db = 0.0;
    std::optional<double> phase_margin_delta_deg;  // computed - published
    bool phase_margin_reproduced = false;
    std::vector<std::string> notes;
};

struct StepSummary {
    std::optional<StepMetrics> metrics;
    double t_end = 0.0;
    std::size_t samples = 0;
    std::string note;
};

struct DesignReport {
    ConverterParams params;
    LoopConfig config;
    PIGains gains;
    TransferFunction loop;
    MarginReport margins;               // loop as configured
    MarginReport margins_plain;         // no modulator or sensor gain
    MarginReport margins_hidden_gains;  // modulator and sensor gains both applied
    TransferFunction closed_loop;
    std::vector<std::complex<double>> closed_loop_poles;
    double closed_loop_dc_gain = 0.0;
    StepSummary step;
    std::optional<PublishedComparison> published;
};

DesignReport design_report(const TransferFunction& plant, const PIGains& g, const LoopConfig& cfg,
                           const ConverterParams& p);

}  // namespace buckforge
