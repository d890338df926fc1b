#include "buckforge/averaging.hpp"

#include <cmath>

#include "buckforge/error.hpp"

namespace buckforge {

namespace {

void require_duty(double d, const char* field) {
    if (!(d >= 0.0 && d <= 1.0)) {
        throw InvalidParameter(field, "duty cycle must lie in [0, 1]");
    }
}

// Solves M x = rhs for a 2x2 system by Cramer's rule.
Eigen::Vector2d solve2(const Eigen::Matrix2d& m, const Eigen::Vector2d& rhs) {
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double scale = m.cwiseAbs().maxCoeff();
    if (det == 0.0 || std::abs(det) <= 1e-14 * scale * scale) {
        throw SingularMatrix(det);
    }
    return {(m(1, 1) * rhs(0) - m(0, 1) * rhs(1)) / det, (m(0, 0) * rhs(1) - m(1, 0) * rhs(0)) / det};
}

}  // namespace

StateSpaceModel averaged_model(const StateSpaceModel& on, const StateSpaceModel& off, double d) {
    require_duty(d, "d");
    if (d == 1.0) return on;
    if (d == 0.0) return off;
    StateSpaceModel m;
    m.a = d * on.a + (1.0 - d) * off.a;
    m.b = d * on.b + (1.0 - d) * off.b;
    m.c = d * on.c + (1.0 - d) * off.c;
    return m;
}

OperatingPoint equilibrium(const StateSpaceModel& on, const StateSpaceModel& off, double d, double vg) {
    const StateSpaceModel avg = averaged_model(on, off, d);
    const Eigen::Vector2d x = solve2(-avg.a, avg.b * vg);
    return OperatingPoint{.duty = d, .il = x(0), .vc = x(1), .vg = vg};
}

OperatingPoint solve_duty(const ConverterParams& p) {
    const auto on = mode_on_model(p);
    const auto off = mode_off_model(p);
    // vc is linear in D: find the slope from the full-duty solution.
    const double gain = equilibrium(on, off, 1.0, p.vg).vc;
    const double d = p.vo_target / gain;
    if (!(d >= 0.0 && d <= 1.0)) {
        throw InvalidParameter("vo_target",
                               "required duty cycle " + std::to_string(d) + " lies outside [0, 1]");
    }
    return equilibrium(on, off, d, p.vg);
}

SmallSignalModel small_signal_model(const StateSpaceModel& on, const StateSpaceModel& off, const OperatingPoint& op) {
    SmallSignalModel ssm;
    ssm.a = op.duty * on.a + (1.0 - op.duty) * off.a;
    ssm.b_d = (on.a - off.a) * op.state() + (on.b - off.b) * op.vg;
    ssm.c << 0.0, 1.0;
    ssm.operating_point = op;
    return ssm;
}

TransferFunction duty_to_output_tf(const SmallSignalModel& ssm) {
    const auto& a = ssm.a;
    const auto& b = ssm.b_d;
    const auto& c = ssm.c;
    // adj(sI - A) = [[s - a11, a01], [a10, s - a00]]
    const double s_coeff = c(0) * b(0) + c(1) * b(1);
    const double const_coeff = c(0) * (-a(1, 1) * b(0) + a(0, 1) * b(1)) + c(1) * (a(1, 0) * b(0) - a(0, 0) * b(1));
    const double trace = a(0, 0) + a(1, 1);
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    return TransferFunction({s_coeff, const_coeff}, {1.0, -trace, det});
}

DerivedModel derive(const ConverterParams& p) {
    const ConverterParams valid = validate_params(p);
    auto on = mode_on_model(valid);
    auto off = mode_off_model(valid);
    const OperatingPoint op = solve_duty(valid);
    auto ssm = small_signal_model(on, off, op);
    auto plant = duty_to_output_tf(ssm);
    return DerivedModel{valid, std::move(on), std::move(off), op, std::move(ssm), std::move(plant)};
}

}  // namespace buckforge
