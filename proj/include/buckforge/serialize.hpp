#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "buckforge/averaging.hpp"
#include "buckforge/lti.hpp"
#include "buckforge/pi_design.hpp"
#include "buckforge/switched_sim.hpp"
#include "buckforge/timedomain.hpp"

namespace buckforge {

using Json = nlohmann::ordered_json;

// Strict reader: every ConverterParams field must be present and numeric; unknown keys are rejected.
ConverterParams params_from_json(const nlohmann::json& j);
ConverterParams load_params(const std::string& path);

Json to_json(const ConverterParams& p);
Json to_json(const PIGains& g);
Json to_json(const LoopConfig& cfg);
Json to_json(const StateSpaceModel& m);
Json to_json(const OperatingPoint& op);
Json to_json(const TransferFunction& tf);
Json to_json(const MarginReport& m);
Json to_json(const StepMetrics& m);
Json to_json(const DerivedModel& d);
Json to_json(const DesignReport& r);
Json to_json(const RegulationReport& r);
Json to_json(const AveragingComparison& c);
Json to_json(const CycleStats& c);

// Finite numbers as-is, +inf/-inf as the strings "inf"/"-inf", NaN as null.
Json number_or_inf(double v);

// 17 significant digits.
std::string format_number(double v);

void write_bode_csv(std::ostream& os, const std::vector<FrequencyPoint>& sweep);
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_switched_csv(std::ostream& os, const SwitchedTrajectory& traj);

}  // namespace buckforge
