#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "buckforge/converter_model.hpp"
#include "buckforge/pi_design.hpp"

namespace buckforge {

struct SimConfig {
    // Physical controller gains: control voltage u = kp * e + ki * integral(e), in volts.
    PIGains gains{17.25, 75.0};
    // Output voltage sensing scale H. Defaults to vref / vo_target.
    std::optional<double> sensor_gain;
    double t_end = 0.5;
    int steps_per_period = 200;
    Eigen::Vector2d initial_state = Eigen::Vector2d::Zero();
    // Clamp on the control voltage and the integrator. Defaults to [0, vs].
    std::optional<double> control_min;
    std::optional<double> control_max;
    // Keep every n-th substep in the recorded trajectory. Cycle statistics always use every substep.
    int record_every = 1;
};

// Means over exactly one switching period.
struct CycleAverages {
    std::size_t period_index = 0;
    double il_avg = 0.0;
    double vc_avg = 0.0;
    double duty = 0.0;
};

// Full-resolution per-period statistics gathered while simulating.
struct CycleStats {
    std::size_t period_index = 0;
    double il_avg = 0.0;
    double vc_avg = 0.0;
    double duty = 0.0;                  // measured on-time / Ts
    double il_min = 0.0;
    double il_max = 0.0;
    double vc_min = 0.0;
    double vc_max = 0.0;
    double inductor_voltage_avg = 0.0;  // (integral of q vg - vc - r_l il) / Ts
    double input_energy = 0.0;          // J drawn from vg during the period
    double load_energy = 0.0;           // J delivered to r_load
};

struct SwitchedTrajectory {
    std::vector<double> times;
    std::vector<double> il;
    std::vector<double> vc;
    std::vector<double> duty_cmd;          // effective duty u / vs, clamped to [0, 1]
    std::vector<std::uint8_t> switch_state;  // 1 while the transistor conducts at the sample instant
    std::vector<CycleStats> cycles;
    double substep = 0.0;                  // seconds
    int record_every = 1;
    bool discontinuous_conduction = false; // inductor current hit zero and was clamped
};

// Rising ramp from 0 to vs once per switching period.
double sawtooth(double t, double fs, double vs);

SwitchedTrajectory simulate_open_loop(const ConverterParams& p, double d, const SimConfig& cfg);

SwitchedTrajectory simulate_closed_loop(const ConverterParams& p, const SimConfig& cfg);

// Trapezoidal period means from the recorded samples. The trailing partial period is dropped.
std::vector<CycleAverages> cycle_average(const SwitchedTrajectory& traj, double fs);

struct AveragingComparison {
    std::size_t periods = 0;
    double max_il_discrepancy = 0.0;  // max over periods of |switched cycle mean - averaged model cycle mean|
    double max_vc_discrepancy = 0.0;
    double final_il_discrepancy = 0.0;
    double final_vc_discrepancy = 0.0;
    double il_ripple = 0.0;           // last period peak-to-peak of the switched run
    double vc_ripple = 0.0;
    CycleStats final_switched;
    CycleStats final_averaged;
};

AveragingComparison compare_to_averaged(const ConverterParams& p, double d, const SimConfig& cfg);

// Controller gains that make the loop through modulator (1/vs) and sensor (H) equal plant * (kp + ki/s).
PIGains controller_gains_for_loop(const PIGains& loop_gains, const ConverterParams& p, double sensor_gain);

double default_sensor_gain(const ConverterParams& p);

struct RegulationReport {
    double vg = 0.0;
    double vo_target = 0.0;
    double tolerance = 0.02;
    double vc_mean = 0.0;
    double il_mean = 0.0;
    double vc_ripple = 0.0;
    double il_ripple = 0.0;
    double duty = 0.0;
    double expected_duty = 0.0;  // loss-aware duty for vo_target at this vg, may exceed 1
    bool duty_saturated_high = false;
    bool duty_saturated_low = false;
    bool discontinuous_conduction = false;
    bool regulated = false;
};

RegulationReport regulation_report(const SwitchedTrajectory& traj, const ConverterParams& p, double tolerance = 0.02);

}  // namespace buckforge
