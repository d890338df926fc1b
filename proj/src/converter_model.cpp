#include "buckforge/converter_model.hpp"

#include <cmath>

#include "buckforge/error.hpp"

namespace buckforge {

namespace {

void require_positive(double value, const char* field) {
    if (!std::isfinite(value) || !(value > 0.0)) {
        throw InvalidParameter(field, "must be a finite positive number");
    }
}

}  // namespace

ConverterParams reference_design() {
    return ConverterParams{
        .vg = 30.0,
        .vo_target = 15.0,
        .r_load = 10.0,
        .r_l = 0.2,
        .l = 250e-6,
        .c = 30e-3,
        .fs = 60e3,
        .vs = 10.0,
        .vref = 2.0,
    };
}

ConverterParams validate_circuit(const ConverterParams& raw) {
    require_positive(raw.vg, "vg");
    require_positive(raw.r_load, "r_load");
    require_positive(raw.l, "l");
    require_positive(raw.c, "c");
    require_positive(raw.fs, "fs");
    require_positive(raw.vs, "vs");
    if (!std::isfinite(raw.r_l) || raw.r_l < 0.0) {
        throw InvalidParameter("r_l", "must be finite and non-negative");
    }
    if (!std::isfinite(raw.vo_target) || !(raw.vo_target > 0.0)) {
        throw InvalidParameter("vo_target", "must be a finite positive number");
    }
    if (!std::isfinite(raw.vref) || raw.vref < 0.0) {
        throw InvalidParameter("vref", "must be finite and non-negative");
    }
    return raw;
}

ConverterParams validate_params(const ConverterParams& raw) {
    validate_circuit(raw);
    if (raw.vo_target > raw.vg) {
        throw InvalidParameter("vo_target", "a buck converter cannot exceed its input voltage vg");
    }
    return raw;
}

StateSpaceModel mode_on_model(const ConverterParams& p) {
    StateSpaceModel m;
    m.a << -p.r_l / p.l, -1.0 / p.l,
            1.0 / p.c, -1.0 / (p.r_load * p.c);
    m.b << 1.0 / p.l, 0.0;
    m.c << 0.0, 1.0;
    return m;
}

StateSpaceModel mode_off_model(const ConverterParams& p) {
    StateSpaceModel m = mode_on_model(p);
    m.b.setZero();
    return m;
}

double ideal_conversion_ratio(double d, double vg) {
    if (!(d >= 0.0 && d <= 1.0)) {
        throw InvalidParameter("d", "duty cycle must lie in [0, 1]");
    }
    return d * vg;
}

}  // namespace buckforge
