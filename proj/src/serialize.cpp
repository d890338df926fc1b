#include "buckforge/serialize.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <ostream>
#include <string_view>

#include <fmt/core.h>

#include "buckforge/error.hpp"

namespace buckforge {

namespace {

constexpr std::array<std::string_view, 9> kParamFields{"vg", "vo_target", "r_load", "r_l", "l",
                                                       "c", "fs", "vs", "vref"};

double* param_slot(ConverterParams& p, std::string_view name) {
    if (name == "vg") return &p.vg;
    if (name == "vo_target") return &p.vo_target;
    if (name == "r_load") return &p.r_load;
    if (name == "r_l") return &p.r_l;
    if (name == "l") return &p.l;
    if (name == "c") return &p.c;
    if (name == "fs") return &p.fs;
    if (name == "vs") return &p.vs;
    if (name == "vref") return &p.vref;
    return nullptr;
}

Json optional_number(const std::optional<double>& v) { return v ? number_or_inf(*v) : Json(nullptr); }

Json complex_list(const std::vector<std::complex<double>>& zs) {
    Json arr = Json::array();
    for (const auto& z : zs) arr.push_back({{"re", number_or_inf(z.real())}, {"im", number_or_inf(z.imag())}});
    return arr;
}

}  // namespace

ConverterParams params_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw InvalidParameter("config", "top-level JSON value must be an object");
    }
    ConverterParams p;
    for (const auto& [key, value] : j.items()) {
        double* slot = param_slot(p, key);
        if (slot == nullptr) {
            throw InvalidParameter(key, "unknown field");
        }
        if (!value.is_number()) {
            throw InvalidParameter(key, "must be a number");
        }
        *slot = value.get<double>();
    }
    for (auto field : kParamFields) {
        if (!j.contains(std::string(field))) {
            throw InvalidParameter(std::string(field), "missing field");
        }
    }
    return validate_params(p);
}

ConverterParams load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidParameter("config", "cannot open '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidParameter("config", std::string("malformed JSON: ") + e.what());
    }
    return params_from_json(j);
}

Json number_or_inf(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

std::string format_number(double v) { return fmt::format("{:.17g}", v); }

Json to_json(const ConverterParams& p) {
    return {{"vg", p.vg}, {"vo_target", p.vo_target}, {"r_load", p.r_load}, {"r_l", p.r_l}, {"l", p.l},
            {"c", p.c},   {"fs", p.fs},               {"vs", p.vs},         {"vref", p.vref}};
}

Json to_json(const PIGains& g) { return {{"kp", g.kp}, {"ki", g.ki}}; }

Json to_json(const LoopConfig& cfg) {
    return {{"include_modulator_gain", cfg.include_modulator_gain}, {"include_sensor_gain", cfg.include_sensor_gain}};
}

Json to_json(const StateSpaceModel& m) {
    return {{"a", {{m.a(0, 0), m.a(0, 1)}, {m.a(1, 0), m.a(1, 1)}}},
            {"b", {m.b(0), m.b(1)}},
            {"c", {m.c(0), m.c(1)}},
            {"state_labels", {StateSpaceModel::state_labels[0], StateSpaceModel::state_labels[1]}}};
}

Json to_json(const OperatingPoint& op) { return {{"duty", op.duty}, {"il", op.il}, {"vc", op.vc}, {"vg", op.vg}}; }

Json to_json(const TransferFunction& tf) { return {{"num", tf.num()}, {"den", tf.den()}}; }

Json to_json(const MarginReport& m) {
    return {{"gain_crossover", optional_number(m.gain_crossover)},
            {"phase_crossover", optional_number(m.phase_crossover)},
            {"gain_margin_db", number_or_inf(m.gain_margin_db)},
            {"phase_margin_deg", optional_number(m.phase_margin_deg)},
            {"stable_loop", m.stable_loop},
            {"gain_crossover_count", m.gain_crossover_count},
            {"phase_crossover_count", m.phase_crossover_count}};
}

Json to_json(const StepMetrics& m) {
    return {{"final_value", m.final_value},
            {"delay_time", m.delay_time},
            {"rise_time", m.rise_time},
            {"settling_time", m.settling_time},
            {"max_overshoot_pct", m.max_overshoot_pct},
            {"steady_state_error", m.steady_state_error},
            {"peak_time", m.peak_time},
            {"peak_value", m.peak_value}};
}

Json to_json(const DerivedModel& d) {
    return {{"params", to_json(d.params)},
            {"mode_on", to_json(d.on)},
            {"mode_off", to_json(d.off)},
            {"operating_point", to_json(d.operating_point)},
            {"duty", d.operating_point.duty},
            {"small_signal",
             {{"a", {{d.small_signal.a(0, 0), d.small_signal.a(0, 1)}, {d.small_signal.a(1, 0), d.small_signal.a(1, 1)}}},
              {"b_d", {d.small_signal.b_d(0), d.small_signal.b_d(1)}},
              {"c", {d.small_signal.c(0), d.small_signal.c(1)}}}},
            {"transfer_function", to_json(d.plant)},
            {"dc_gain", dc_gain(d.plant)},
            {"poles", complex_list(poles(d.plant))}};
}

Json to_json(const DesignReport& r) {
    Json step = {{"t_end", r.step.t_end}, {"samples", r.step.samples}, {"note", r.step.note}};
    step["metrics"] = r.step.metrics ? to_json(*r.step.metrics) : Json(nullptr);

    Json published = nullptr;
    if (r.published) {
        const auto& c = *r.published;
        published = {{"label", c.published.label},
                     {"published_phase_margin_deg", c.published.phase_margin_deg},
                     {"published_phase_margin_is_lower_bound", c.published.phase_margin_is_lower_bound},
                     {"published_gain_margin_db", c.published.gain_margin_db},
                     {"published_stable", c.published.stable_claim},
                     {"computed_phase_margin_deg", optional_number(c.computed_phase_margin_deg)},
                     {"computed_gain_margin_db", number_or_inf(c.computed_gain_margin_db)},
                     {"phase_margin_delta_deg", optional_number(c.phase_margin_delta_deg)},
                     {"phase_margin_reproduced", c.phase_margin_reproduced},
                     {"notes", c.notes}};
    }
    return {{"params", to_json(r.params)},
            {"loop_config", to_json(r.config)},
            {"gains", to_json(r.gains)},
            {"loop", to_json(r.loop)},
            {"margins", to_json(r.margins)},
            {"margins_plain", to_json(r.margins_plain)},
            {"margins_with_modulator_and_sensor", to_json(r.margins_hidden_gains)},
            {"closed_loop", to_json(r.closed_loop)},
            {"closed_loop_poles", complex_list(r.closed_loop_poles)},
            {"closed_loop_dc_gain", r.closed_loop_dc_gain},
            {"step", step},
            {"published_comparison", published}};
}

Json to_json(const RegulationReport& r) {
    return {{"vg", r.vg},
            {"vo_target", r.vo_target},
            {"tolerance", r.tolerance},
            {"vc_mean", r.vc_mean},
            {"il_mean", r.il_mean},
            {"vc_ripple", r.vc_ripple},
            {"il_ripple", r.il_ripple},
            {"duty", r.duty},
            {"expected_duty", r.expected_duty},
            {"duty_saturated_high", r.duty_saturated_high},
            {"duty_saturated_low", r.duty_saturated_low},
            {"discontinuous_conduction", r.discontinuous_conduction},
            {"regulated", r.regulated}};
}

Json to_json(const CycleStats& c) {
    return {{"period_index", c.period_index},
            {"il_avg", c.il_avg},
            {"vc_avg", c.vc_avg},
            {"duty", c.duty},
            {"il_min", c.il_min},
            {"il_max", c.il_max},
            {"vc_min", c.vc_min},
            {"vc_max", c.vc_max},
            {"inductor_voltage_avg", c.inductor_voltage_avg},
            {"input_energy", c.input_energy},
            {"load_energy", c.load_energy}};
}

Json to_json(const AveragingComparison& c) {
    return {{"periods", c.periods},
            {"max_il_discrepancy", c.max_il_discrepancy},
            {"max_vc_discrepancy", c.max_vc_discrepancy},
            {"final_il_discrepancy", c.final_il_discrepancy},
            {"final_vc_discrepancy", c.final_vc_discrepancy},
            {"il_ripple", c.il_ripple},
            {"vc_ripple", c.vc_ripple},
            {"final_switched", to_json(c.final_switched)},
            {"final_averaged", to_json(c.final_averaged)}};
}

void write_bode_csv(std::ostream& os, const std::vector<FrequencyPoint>& sweep) {
    os << "omega_rad_s,magnitude_db,phase_deg\n";
    for (const auto& pt : sweep) {
        os << format_number(pt.omega) << ',' << format_number(pt.magnitude_db) << ',' << format_number(pt.phase_deg)
           << '\n';
    }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "time_s,output\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        os << format_number(traj.times[i]) << ',' << format_number(traj.values[i]) << '\n';
    }
}

void write_switched_csv(std::ostream& os, const SwitchedTrajectory& traj) {
    os << "time_s,il_a,vc_v,duty,switch_state\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        os << format_number(traj.times[i]) << ',' << format_number(traj.il[i]) << ',' << format_number(traj.vc[i])
           << ',' << format_number(traj.duty_cmd[i]) << ',' << static_cast<int>(traj.switch_state[i]) << '\n';
    }
}

}  // namespace buckforge
