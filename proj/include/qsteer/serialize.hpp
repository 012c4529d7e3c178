// serialize.hpp — JSON and CSV emission for plans, certificates, and reports.
//
// Reports are serialized with sorted keys and no timing or environment
// fields, so identical experiments produce byte-identical files.  Floating
// point numbers are written with enough digits to round-trip.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qsteer/compiler.hpp"
#include "qsteer/core.hpp"
#include "qsteer/graph.hpp"
#include "qsteer/pipeline.hpp"
#include "qsteer/planner.hpp"

namespace qsteer {

using json = nlohmann::json;

inline json rotation_json(const Rotation& rot) {
  return {{"i", rot.i},
          {"j", rot.j},
          {"theta", rot.theta},
          {"angle", rot.angle},
          {"sigma_duration", rot.sigma_duration}};
}

inline json plan_json(const PilotPlan& plan) {
  json rotations = json::array();
  for (const Rotation& rot : plan.rotations) rotations.push_back(rotation_json(rot));
  json reverse = json::array();
  for (const Rotation& rot : plan.reverse_rotations) reverse.push_back(rotation_json(rot));
  return {{"rotations", std::move(rotations)},
          {"reverse_rotations", std::move(reverse)},
          {"target_vertex", plan.target_vertex},
          {"final_phase", plan.final_phase},
          {"reverse_phase", plan.reverse_phase},
          {"free_evolution_duration", plan.free_evolution_duration},
          {"nu", plan.nu}};
}

inline json nonresonance_json(const NonresonanceReport& report) {
  json a1 = json::array();
  for (const GapCollision& v : report.violations_a1)
    a1.push_back({{"chain_pair", {v.chain_pair[0], v.chain_pair[1]}},
                  {"coupled_pair", {v.coupled_pair[0], v.coupled_pair[1]}},
                  {"gap_chain", v.gap_chain},
                  {"gap_coupled", v.gap_coupled}});
  json a2 = json::array();
  for (const DegeneratePair& v : report.violations_a2)
    a2.push_back({{"i", v.i}, {"j", v.j}, {"gap", v.gap}});
  return {{"ok", report.ok()}, {"violations_a1", std::move(a1)}, {"violations_a2", std::move(a2)}};
}

inline json certificate_json(const BudgetCertificate& cert) {
  return {{"l1", cert.l1}, {"budget", cert.budget}, {"ok", cert.ok},
          {"min_coupling", cert.min_coupling}};
}

inline json report_json(const ExperimentReport& report) {
  json pulses = json::array();
  for (const PulseSpec& p : report.compiled.pulses)
    pulses.push_back({{"carrier_frequency", p.carrier_frequency},
                      {"carrier_phase", p.carrier_phase},
                      {"amplitude", p.amplitude},
                      {"samples_per_period", p.samples_per_period},
                      {"pulse_duration", p.pulse_duration}});

  return {{"schema_version", report.schema_version},
          {"model",
           {{"type", report.model_type},
            {"interaction_position", report.interaction_position}}},
          {"eta", report.eta},
          {"epsilon", report.epsilon},
          {"u0", report.u0},
          {"nu", report.nu},
          {"samples_per_period", report.samples_per_period},
          {"rng_seed", report.rng_seed},
          {"target_levels", report.target_levels},
          {"planner_levels", report.planner_levels},
          {"component_levels", report.component_levels},
          {"target_vertex", report.target_vertex},
          {"truncation", report.truncation},
          {"double_truncation", report.double_truncation},
          {"chain", nonresonance_json(report.chain)},
          {"plan", plan_json(report.plan)},
          {"schedule",
           {{"segments", report.compiled.schedule.segments.size()},
            {"total_duration", report.compiled.schedule.total_duration()},
            {"forward_duration", report.compiled.forward_duration},
            {"free_duration", report.compiled.free_duration},
            {"reverse_duration", report.compiled.reverse_duration},
            {"pulses", std::move(pulses)}}},
          {"certificate", certificate_json(report.compiled.certificate)},
          {"exported",
           {{"segments", report.exported_schedule.segments.size()},
            {"l1", report.exported_l1},
            {"max_amplitude", report.exported_max_amplitude}}},
          {"budget", {{"l1", report.l1}, {"budget", report.budget}, {"ok", report.budget_ok}}},
          {"fidelity",
           {{"distance", report.distance},
            {"overlap_sq", report.overlap_sq},
            {"distance_double", report.distance_double},
            {"unitarity_defect", report.unitarity_defect},
            {"ok", report.fidelity_ok}}},
          {"passed", report.passed}};
}

namespace detail {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

// One row per segment: index, start time, duration, amplitude.
inline std::string schedule_csv(const ControlSchedule& schedule) {
  std::string out = "index,start,duration,amplitude\n";
  double start = 0.0;
  for (size_t i = 0; i < schedule.segments.size(); ++i) {
    const Segment& s = schedule.segments[i];
    out += std::to_string(i);
    out += ',';
    out += detail::format_double(start);
    out += ',';
    out += detail::format_double(s.duration);
    out += ',';
    out += detail::format_double(s.amplitude);
    out += '\n';
    start += s.duration;
  }
  return out;
}

// One row per sample: time, norm, then the population of each level.
inline std::string trace_csv(const std::vector<std::pair<double, StateVector>>& trace) {
  std::string out = "time,norm";
  const int n = trace.empty() ? 0 : static_cast<int>(trace.front().second.size());
  for (int l = 1; l <= n; ++l) out += ",p" + std::to_string(l);
  out += '\n';
  for (const auto& [time, state] : trace) {
    out += detail::format_double(time);
    out += ',';
    out += detail::format_double(state.norm());
    for (int l = 0; l < n; ++l) {
      out += ',';
      out += detail::format_double(std::norm(state(l)));
    }
    out += '\n';
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path.string() + " for writing");
  file << content;
  if (!file) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace qsteer
