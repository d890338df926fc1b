#pragma once

#include <array>
#include <string_view>

#include <Eigen/Dense>

namespace buckforge {

// Buck converter circuit constants, regulation targets and PWM settings. SI units.
struct ConverterParams {
    double vg = 0.0;         // nominal input voltage [V]
    double vo_target = 0.0;  // desired output voltage [V]
    double r_load = 0.0;     // load resistance [Ohm]
    double r_l = 0.0;        // inductor series resistance [Ohm]
    double l = 0.0;          // inductance [H]
    double c = 0.0;          // capacitance [F]
    double fs = 0.0;         // switching frequency [Hz]
    double vs = 0.0;         // PWM sawtooth peak [V]
    double vref = 0.0;       // controller reference [V]

    bool operator==(const ConverterParams&) const = default;
};

// The reference design: 30 V -> 15 V into 10 Ohm, 250 uH / 0.2 Ohm, 30 mF, 60 kHz, 10 V ramp, 2 V reference.
ConverterParams reference_design();

// Two-state, single-input, single-output linear model. State x = [i_L, v_C].
struct StateSpaceModel {
    Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
    Eigen::Vector2d b = Eigen::Vector2d::Zero();
    Eigen::RowVector2d c = Eigen::RowVector2d::Zero();

    static constexpr std::array<std::string_view, 2> state_labels{"inductor current (A)", "capacitor voltage (V)"};
};

// Returns `raw` unchanged when every invariant holds, otherwise throws InvalidParameter naming the field.
ConverterParams validate_params(const ConverterParams& raw);

// Like validate_params, but accepts vo_target > vg. A converter asked to step up is physically
// valid to simulate; it simply cannot regulate.
ConverterParams validate_circuit(const ConverterParams& raw);

// Switch on, diode off: the source drives the inductor.
StateSpaceModel mode_on_model(const ConverterParams& p);

// Switch off, diode freewheeling: same dynamics, no source.
StateSpaceModel mode_off_model(const ConverterParams& p);

// Lossless volt-second balance: vo = d * vg.
double ideal_conversion_ratio(double d, double vg);

}  // namespace buckforge
