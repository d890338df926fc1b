#include "buckforge/switched_sim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "buckforge/averaging.hpp"
#include "buckforge/error.hpp"
#include "buckforge/linalg.hpp"

namespace buckforge {

namespace {

// Exact update over a fixed interval for one switching mode: x+ = phi x + gamma vg.
struct ModeStep {
    Eigen::Matrix2d phi;
    Eigen::Vector2d gamma;
};

ModeStep exact_step(const StateSpaceModel& m, double h) {
    const auto d = linalg::discretize_zoh(m.a, m.b, h);
    return {d.phi, d.gamma};
}

// Boundary-substep maps keyed by on-time. Open-loop runs hit the same length every period.
class BoundaryCache {
public:
    BoundaryCache(const StateSpaceModel& on, const StateSpaceModel& off, double h) : on_(on), off_(off), h_(h) {}

    const std::pair<ModeStep, ModeStep>& get(double tau_on) {
        if (tau_on != cached_tau_) {
            cached_ = {exact_step(on_, tau_on), exact_step(off_, h_ - tau_on)};
            cached_tau_ = tau_on;
        }
        return cached_;
    }

private:
    const StateSpaceModel& on_;
    const StateSpaceModel& off_;
    double h_;
    double cached_tau_ = -1.0;
    std::pair<ModeStep, ModeStep> cached_;
};

struct CycleAccumulator {
    double il_int = 0.0;
    double vc_int = 0.0;
    double vc_sq_int = 0.0;
    double on_time = 0.0;
    double on_units = 0.0;  // on-time in substeps; whole substeps add exactly
    double on_il_int = 0.0;
    double il_min = std::numeric_limits<double>::infinity();
    double il_max = -std::numeric_limits<double>::infinity();
    double vc_min = std::numeric_limits<double>::infinity();
    double vc_max = -std::numeric_limits<double>::infinity();

    void observe(const Eigen::Vector2d& x) {
        il_min = std::min(il_min, x(0));
        il_max = std::max(il_max, x(0));
        vc_min = std::min(vc_min, x(1));
        vc_max = std::max(vc_max, x(1));
    }

    void segment(const Eigen::Vector2d& x0, const Eigen::Vector2d& x1, double dt, bool on) {
        const double il = 0.5 * (x0(0) + x1(0)) * dt;
        il_int += il;
        vc_int += 0.5 * (x0(1) + x1(1)) * dt;
        vc_sq_int += 0.5 * (x0(1) * x0(1) + x1(1) * x1(1)) * dt;
        if (on) {
            on_time += dt;
            on_il_int += il;
        }
        observe(x1);
    }
};

// Returns the desired control voltage for the substep starting at time t with state x.
using ControlLaw = std::function<double(double t, const Eigen::Vector2d& x)>;

void validate_config(const ConverterParams& p, const SimConfig& cfg) {
    if (cfg.steps_per_period < 20) {
        throw InvalidParameter("steps_per_period", "must be at least 20");
    }
    if (!(cfg.t_end * p.fs >= 10.0 - 1e-9) || !std::isfinite(cfg.t_end)) {
        throw InvalidParameter("t_end", "must span at least 10 switching periods");
    }
    if (cfg.record_every < 1) {
        throw InvalidParameter("record_every", "must be at least 1");
    }
    if (!cfg.initial_state.allFinite()) {
        throw InvalidParameter("initial_state", "must be finite");
    }
}

SwitchedTrajectory run_switched(const ConverterParams& p, const StateSpaceModel& on, const StateSpaceModel& off,
                                const SimConfig& cfg, const ControlLaw& control) {
    validate_config(p, cfg);
    const auto n_per = static_cast<std::size_t>(cfg.steps_per_period);
    const double period = 1.0 / p.fs;
    const double h = period / static_cast<double>(n_per);
    const auto total = static_cast<std::size_t>(std::llround(cfg.t_end / h));
    const auto stride = static_cast<std::size_t>(cfg.record_every);

    const ModeStep step_on = exact_step(on, h);
    const ModeStep step_off = exact_step(off, h);
    BoundaryCache boundary(on, off, h);

    SwitchedTrajectory traj;
    traj.substep = h;
    traj.record_every = cfg.record_every;
    const std::size_t n_rec = total / stride + 1;
    traj.times.reserve(n_rec);
    traj.il.reserve(n_rec);
    traj.vc.reserve(n_rec);
    traj.duty_cmd.reserve(n_rec);
    traj.switch_state.reserve(n_rec);
    traj.cycles.reserve(total / n_per);

    Eigen::Vector2d x = cfg.initial_state;
    CycleAccumulator acc;
    acc.observe(x);
    double duty = 0.0;
    bool q = false;

    auto record = [&](std::size_t k) {
        traj.times.push_back(static_cast<double>(k) * h);
        traj.il.push_back(x(0));
        traj.vc.push_back(x(1));
        traj.duty_cmd.push_back(duty);
        traj.switch_state.push_back(q ? 1 : 0);
    };
    auto clamp_diode = [&](Eigen::Vector2d& state) {
        if (state(0) < 0.0) {
            state(0) = 0.0;
            traj.discontinuous_conduction = true;
        }
    };

    for (std::size_t k = 0; k < total; ++k) {
        const std::size_t j = k % n_per;
        const double t = static_cast<double>(k) * h;
        const double u = control(t, x);
        duty = std::clamp(u / p.vs, 0.0, 1.0);

        // Comparator u > ramp: conducting from the period start until ramp reaches u.
        double on_frac = std::clamp(duty * static_cast<double>(n_per) - static_cast<double>(j), 0.0, 1.0);
        if (on_frac < 1e-12) on_frac = 0.0;
        if (on_frac > 1.0 - 1e-12) on_frac = 1.0;
        q = on_frac > 0.0;

        if (k % stride == 0) record(k);

        const Eigen::Vector2d x0 = x;
        if (on_frac == 1.0) {
            x = step_on.phi * x + step_on.gamma * p.vg;
            acc.segment(x0, x, h, true);
            acc.on_units += 1.0;
        } else if (on_frac == 0.0) {
            x = step_off.phi * x + step_off.gamma * p.vg;
            clamp_diode(x);
            acc.segment(x0, x, h, false);
        } else {
            const double tau_on = on_frac * h;
            const auto& [first, second] = boundary.get(tau_on);
            const Eigen::Vector2d xs = first.phi * x + first.gamma * p.vg;
            acc.segment(x0, xs, tau_on, true);
            acc.on_units += on_frac;
            x = second.phi * xs + second.gamma * p.vg;
            clamp_diode(x);
            acc.segment(xs, x, h - tau_on, false);
        }

        if (j + 1 == n_per) {
            CycleStats c;
            c.period_index = k / n_per;
            c.il_avg = acc.il_int / period;
            c.vc_avg = acc.vc_int / period;
            c.duty = acc.on_units / static_cast<double>(n_per);
            c.il_min = acc.il_min;
            c.il_max = acc.il_max;
            c.vc_min = acc.vc_min;
            c.vc_max = acc.vc_max;
            c.inductor_voltage_avg = (p.vg * acc.on_time - acc.vc_int - p.r_l * acc.il_int) / period;
            c.input_energy = p.vg * acc.on_il_int;
            c.load_energy = acc.vc_sq_int / p.r_load;
            traj.cycles.push_back(c);
            acc = CycleAccumulator{};
            acc.observe(x);
        }
    }
    if (total % stride == 0) record(total);
    return traj;
}

}  // namespace

double sawtooth(double t, double fs, double vs) {
    const double phase = t * fs;
    return vs * (phase - std::floor(phase));
}

double default_sensor_gain(const ConverterParams& p) { return p.vref / p.vo_target; }

PIGains controller_gains_for_loop(const PIGains& loop_gains, const ConverterParams& p, double sensor_gain) {
    if (!(sensor_gain > 0.0)) {
        throw InvalidParameter("sensor_gain", "must be positive");
    }
    const double k = p.vs / sensor_gain;
    return {loop_gains.kp * k, loop_gains.ki * k};
}

SwitchedTrajectory simulate_open_loop(const ConverterParams& p, double d, const SimConfig& cfg) {
    const ConverterParams v = validate_circuit(p);
    if (!(d >= 0.0 && d <= 1.0)) {
        throw InvalidParameter("d", "duty cycle must lie in [0, 1]");
    }
    const double u = d * v.vs;
    return run_switched(v, mode_on_model(v), mode_off_model(v), cfg, [u](double, const Eigen::Vector2d&) { return u; });
}

SwitchedTrajectory simulate_closed_loop(const ConverterParams& p, const SimConfig& cfg) {
    const ConverterParams v = validate_circuit(p);
    const PIGains g = validate_gains(cfg.gains);
    const double sensor = cfg.sensor_gain.value_or(default_sensor_gain(v));
    if (!(sensor >= 0.0) || !std::isfinite(sensor)) {
        throw InvalidParameter("sensor_gain", "must be finite and non-negative");
    }
    const double lo = cfg.control_min.value_or(0.0);
    const double hi = cfg.control_max.value_or(v.vs);
    if (!(hi > lo)) {
        throw InvalidParameter("control_max", "control clamp must satisfy control_min < control_max");
    }
    const double h = 1.0 / (v.fs * cfg.steps_per_period);

    double integral = 0.0;
    double previous_error = 0.0;
    bool first = true;
    auto law = [&](double, const Eigen::Vector2d& x) {
        const double e = v.vref - sensor * x(1);
        if (first) {
            previous_error = e;
            first = false;
        }
        const double candidate = integral + g.ki * 0.5 * (previous_error + e) * h;
        previous_error = e;
        const double unsaturated = g.kp * e + candidate;
        // Conditional integration: hold the integrator while saturated and the error deepens it.
        const bool winding_up = (unsaturated > hi && e > 0.0) || (unsaturated < lo && e < 0.0);
        if (!winding_up) {
            integral = std::clamp(candidate, lo, hi);
        }
        return std::clamp(g.kp * e + integral, lo, hi);
    };
    return run_switched(v, mode_on_model(v), mode_off_model(v), cfg, law);
}

std::vector<CycleAverages> cycle_average(const SwitchedTrajectory& traj, double fs) {
    const std::size_t n = traj.times.size();
    if (n < 2 || !(fs > 0.0)) {
        throw InvalidParameter("traj", "trajectory shorter than one switching period");
    }
    const double dt = traj.times[1] - traj.times[0];
    const double per_period = 1.0 / (fs * dt);
    const auto spp = static_cast<std::size_t>(std::llround(per_period));
    if (spp < 1 || std::abs(per_period - static_cast<double>(spp)) > 1e-6 * per_period) {
        throw InvalidParameter("traj", "sample spacing does not divide the switching period");
    }
    const std::size_t periods = (n - 1) / spp;
    if (periods == 0) {
        throw InvalidParameter("traj", "trajectory shorter than one switching period");
    }
    const auto first_index = static_cast<std::size_t>(std::llround(traj.times[0] * fs));
    const bool has_duty = traj.duty_cmd.size() == n;

    std::vector<CycleAverages> out;
    out.reserve(periods);
    for (std::size_t k = 0; k < periods; ++k) {
        const std::size_t b = k * spp;
        double il = 0.0;
        double vc = 0.0;
        double duty = 0.0;
        for (std::size_t i = b; i < b + spp; ++i) {
            il += 0.5 * (traj.il[i] + traj.il[i + 1]);
            vc += 0.5 * (traj.vc[i] + traj.vc[i + 1]);
            if (has_duty) duty += traj.duty_cmd[i];
        }
        const double inv = 1.0 / static_cast<double>(spp);
        out.push_back({first_index + k, il * inv, vc * inv, duty * inv});
    }
    return out;
}

AveragingComparison compare_to_averaged(const ConverterParams& p, double d, const SimConfig& cfg) {
    const ConverterParams v = validate_params(p);
    const auto on = mode_on_model(v);
    const auto off = mode_off_model(v);
    const SwitchedTrajectory switched = simulate_open_loop(v, d, cfg);

    // The averaged model, run through the same exact-substep engine with a single mode.
    const StateSpaceModel avg = averaged_model(on, off, d);
    const double full = v.vs;
    const SwitchedTrajectory averaged =
        run_switched(v, avg, avg, cfg, [full](double, const Eigen::Vector2d&) { return full; });

    AveragingComparison cmp;
    cmp.periods = std::min(switched.cycles.size(), averaged.cycles.size());
    for (std::size_t k = 0; k < cmp.periods; ++k) {
        cmp.max_il_discrepancy =
            std::max(cmp.max_il_discrepancy, std::abs(switched.cycles[k].il_avg - averaged.cycles[k].il_avg));
        cmp.max_vc_discrepancy =
            std::max(cmp.max_vc_discrepancy, std::abs(switched.cycles[k].vc_avg - averaged.cycles[k].vc_avg));
    }
    if (cmp.periods > 0) {
        cmp.final_switched = switched.cycles[cmp.periods - 1];
        cmp.final_averaged = averaged.cycles[cmp.periods - 1];
        cmp.final_il_discrepancy = std::abs(cmp.final_switched.il_avg - cmp.final_averaged.il_avg);
        cmp.final_vc_discrepancy = std::abs(cmp.final_switched.vc_avg - cmp.final_averaged.vc_avg);
        cmp.il_ripple = cmp.final_switched.il_max - cmp.final_switched.il_min;
        cmp.vc_ripple = cmp.final_switched.vc_max - cmp.final_switched.vc_min;
    }
    return cmp;
}

RegulationReport regulation_report(const SwitchedTrajectory& traj, const ConverterParams& p, double tolerance) {
    if (traj.cycles.empty()) {
        throw InvalidParameter("traj", "trajectory contains no complete switching period");
    }
    const CycleStats& last = traj.cycles.back();
    RegulationReport r;
    r.vg = p.vg;
    r.vo_target = p.vo_target;
    r.tolerance = tolerance;
    r.vc_mean = last.vc_avg;
    r.il_mean = last.il_avg;
    r.vc_ripple = last.vc_max - last.vc_min;
    r.il_ripple = last.il_max - last.il_min;
    r.duty = last.duty;
    r.expected_duty = p.vo_target * (p.r_load + p.r_l) / (p.vg * p.r_load);
    r.duty_saturated_high = last.duty >= 1.0 - 1e-12;
    r.duty_saturated_low = last.duty <= 1e-12;
    r.discontinuous_conduction = traj.discontinuous_conduction;
    r.regulated = std::abs(last.vc_avg - p.vo_target) <= tolerance * p.vo_target;
    return r;
}

}  // namespace buckforge
