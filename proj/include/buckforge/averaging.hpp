#pragma once

#include "buckforge/converter_model.hpp"
#include "buckforge/lti.hpp"

namespace buckforge {

struct OperatingPoint {
    double duty = 0.0;  // D in [0, 1]
    double il = 0.0;    // equilibrium inductor current [A]
    double vc = 0.0;    // equilibrium capacitor voltage [V]
    double vg = 0.0;    // input voltage at which it was computed [V]

    Eigen::Vector2d state() const { return {il, vc}; }
};

// Linearization of the averaged model about an operating point, duty channel only.
struct SmallSignalModel {
    Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
    Eigen::Vector2d b_d = Eigen::Vector2d::Zero();
    Eigen::RowVector2d c = Eigen::RowVector2d::Zero();
    OperatingPoint operating_point;
};

// Duty-weighted blend of the two switching modes.
StateSpaceModel averaged_model(const StateSpaceModel& on, const StateSpaceModel& off, double d);

// DC solution of the averaged model, x0 = -A^-1 B vg, solved in closed form.
OperatingPoint equilibrium(const StateSpaceModel& on, const StateSpaceModel& off, double d, double vg);

// Nominal duty cycle that places the equilibrium output at vo_target. The output is linear
// in D, so the solution is direct.
OperatingPoint solve_duty(const ConverterParams& p);

SmallSignalModel small_signal_model(const StateSpaceModel& on, const StateSpaceModel& off, const OperatingPoint& op);

// C (sI - A)^-1 b_d for the two-state model, via the adjugate.
TransferFunction duty_to_output_tf(const SmallSignalModel& ssm);

// Everything the pipeline needs from one set of converter parameters.
struct DerivedModel {
    ConverterParams params;
    StateSpaceModel on;
    StateSpaceModel off;
    OperatingPoint operating_point;
    SmallSignalModel small_signal;
    TransferFunction plant;
};

DerivedModel derive(const ConverterParams& p);

}  // namespace buckforge
