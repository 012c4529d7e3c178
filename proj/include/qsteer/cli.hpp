// cli.hpp — command line front end: analyze, control, and sweep.
//
// All three subcommands read a JSON configuration (schema_version 1) and
// write their artifacts into --out.  Exit codes:
//
//   0  success (analyze: certified; control: distance < epsilon and budget kept)
//   1  input error (unreadable config, missing or ill-typed fields, bad parameters)
//   2  analyze found nonresonance violations or a disconnected graph
//   3  control targets put weight on unreachable levels
//   4  control missed the fidelity target
//   5  control broke the L1 budget (reported only when the fidelity passed)
//
// A sweep exits 0 when every grid point ran to completion, whatever the
// individual pass/fail outcomes; any point that throws makes it exit 1.

#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "qsteer/graph.hpp"
#include "qsteer/models.hpp"
#include "qsteer/pipeline.hpp"
#include "qsteer/serialize.hpp"

namespace qsteer {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace cli_detail {

inline json load_config(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << file.rdbuf();
  const std::string text = buffer.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    size_t line = 1;
    const size_t stop = std::min(static_cast<size_t>(e.byte), text.size());
    for (size_t i = 0; i < stop; ++i)
      if (text[i] == '\n') ++line;
    throw ConfigError(path.string() + ":" + std::to_string(line) + ": " + e.what());
  }
}

inline const json& require_field(const json& j, const std::string& where, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError("config field " + where + "." + key + " is missing");
  return *it;
}

inline double get_num(const json& j, const std::string& where, const char* key,
                      std::optional<double> fallback = {}) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (fallback) return *fallback;
    throw ConfigError("config field " + where + "." + key + " is missing");
  }
  if (!it->is_number())
    throw ConfigError("config field " + where + "." + key + " must be a number");
  return it->get<double>();
}

inline int get_int(const json& j, const std::string& where, const char* key,
                   std::optional<int> fallback = {}) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (fallback) return *fallback;
    throw ConfigError("config field " + where + "." + key + " is missing");
  }
  if (!it->is_number_integer())
    throw ConfigError("config field " + where + "." + key + " must be an integer");
  return it->get<int>();
}

inline bool get_bool(const json& j, const std::string& where, const char* key, bool fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean())
    throw ConfigError("config field " + where + "." + key + " must be a boolean");
  return it->get<bool>();
}

inline std::string get_str(const json& j, const std::string& where, const char* key,
                           std::optional<std::string> fallback = {}) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (fallback) return *fallback;
    throw ConfigError("config field " + where + "." + key + " is missing");
  }
  if (!it->is_string())
    throw ConfigError("config field " + where + "." + key + " must be a string");
  return it->get<std::string>();
}

inline void check_schema(const json& config) {
  const auto it = config.find("schema_version");
  if (it == config.end() || !it->is_number_integer() || it->get<int>() != 1)
    throw ConfigError("config must declare schema_version 1");
}

inline ModelSpec parse_model(const json& config) {
  const json& m = require_field(config, "config", "model");
  ModelSpec spec;
  const std::string type = get_str(m, "model", "type");
  if (type == "delta_box") {
    spec.kind = ModelSpec::Kind::delta_box;
    spec.interaction_position = get_num(m, "model", "position", 0.5);
    spec.eta = get_num(m, "model", "eta", 0.0);
    spec.r = get_num(m, "model", "r", 1.0);
    spec.young_epsilon = get_num(m, "model", "young_epsilon", 0.1);
  } else if (type == "matrix") {
    spec.kind = ModelSpec::Kind::matrix;
    spec.r = get_num(m, "model", "r", 1.0);
    spec.relative_bound_a = get_num(m, "model", "a");
    spec.relative_bound_b = get_num(m, "model", "b");
    const json& values = require_field(m, "model", "spectrum");
    if (!values.is_array() || values.empty())
      throw ConfigError("config field model.spectrum must be a nonempty array");
    for (const json& v : values) {
      if (!v.is_number()) throw ConfigError("config field model.spectrum must hold numbers");
      spec.spectrum.push_back(v.get<double>());
    }
    const int n = static_cast<int>(spec.spectrum.size());
    const auto read_matrix = [&](const char* key, bool required) {
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
      const auto it = m.find(key);
      if (it == m.end()) {
        if (required) throw ConfigError(std::string("config field model.") + key + " is missing");
        return out;
      }
      if (!it->is_array() || static_cast<int>(it->size()) != n)
        throw ConfigError(std::string("config field model.") + key + " must be an " +
                          std::to_string(n) + "x" + std::to_string(n) + " matrix");
      for (int i = 0; i < n; ++i) {
        const json& row = (*it)[static_cast<size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != n)
          throw ConfigError(std::string("config field model.") + key + " must be an " +
                            std::to_string(n) + "x" + std::to_string(n) + " matrix");
        for (int k = 0; k < n; ++k) {
          const json& cell = row[static_cast<size_t>(k)];
          if (!cell.is_number())
            throw ConfigError(std::string("config field model.") + key + " must hold numbers");
          out(i, k) = cell.get<double>();
        }
      }
      return out;
    };
    const Eigen::MatrixXd re = read_matrix("coupling_re", true);
    const Eigen::MatrixXd im = read_matrix("coupling_im", false);
    spec.coupling = re.cast<complexd>() + complexd(0.0, 1.0) * im.cast<complexd>();
  } else {
    throw ConfigError("config field model.type must be \"delta_box\" or \"matrix\"");
  }
  return spec;
}

inline std::vector<complexd> parse_state(const json& section, const std::string& where,
                                         const char* key) {
  const json& entries = require_field(section, where, key);
  if (!entries.is_array() || entries.empty())
    throw ConfigError("config field " + where + "." + key +
                      " must be a nonempty array of [re, im] pairs");
  std::vector<complexd> state;
  for (const json& pair : entries) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
      throw ConfigError("config field " + where + "." + key +
                        " must be a nonempty array of [re, im] pairs");
    state.emplace_back(pair[0].get<double>(), pair[1].get<double>());
  }
  return state;
}

struct LiftConfig {
  bool enabled = false;
  double eta_max = 0.5;
};

inline LiftConfig parse_lift(const json& section, const std::string& where) {
  LiftConfig lift;
  const auto it = section.find("lift");
  if (it == section.end()) return lift;
  if (!it->is_object()) throw ConfigError("config field " + where + ".lift must be an object");
  lift.enabled = get_bool(*it, where + ".lift", "enabled", false);
  lift.eta_max = get_num(*it, where + ".lift", "eta_max", 0.5);
  return lift;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace cli_detail

struct CliOptions {
  std::string config;
  std::string out = ".";
  int threads = 0;
  bool verbose = false;
};

// Exit code for a finished control run: a fidelity miss outranks a broken
// budget, and a run that kept both promises exits 0.
inline int control_exit_code(const ExperimentReport& report) {
  if (!report.fidelity_ok) return 4;
  if (!report.budget_ok) return 5;
  return 0;
}

inline int cmd_analyze(const CliOptions& opts) {
  using namespace cli_detail;
  const json config = load_config(opts.config);
  check_schema(config);
  const ModelSpec spec = parse_model(config);
  const json& section = require_field(config, "config", "analyze");
  const int levels = get_int(section, "analyze", "levels");
  if (levels < 1) throw ConfigError("config field analyze.levels must be positive");
  const std::string subspace = get_str(section, "analyze", "subspace", std::string("full"));
  if (subspace != "full" && subspace != "even")
    throw ConfigError("config field analyze.subspace must be \"full\" or \"even\"");
  const double gap_tolerance = get_num(section, "analyze", "gap_tolerance", kGapTolerance);
  const double zero_tolerance = get_num(section, "analyze", "zero_tolerance",
                                        kZeroCouplingTolerance);
  const LiftConfig lift = parse_lift(section, "analyze");

  if (subspace == "even" && spec.kind != ModelSpec::Kind::delta_box)
    throw ConfigError("analyze.subspace \"even\" needs the delta box model");
  if (lift.enabled && (spec.kind != ModelSpec::Kind::delta_box || subspace != "even"))
    throw ConfigError("analyze.lift needs the delta box model on the even subspace");
  if (lift.enabled && spec.eta != 0.0)
    throw ConfigError("analyze.lift chooses eta itself; set model.eta to 0");

  double eta = spec.eta;
  if (lift.enabled) {
    DeltaBoxModel model;
    model.interaction_position = spec.interaction_position;
    model.truncation = std::max(2, levels);
    eta = lift_resonances(model, levels, lift.eta_max).eta;
  }

  const auto build = [&](double strength) {
    if (spec.kind == ModelSpec::Kind::matrix) {
      if (levels > static_cast<int>(spec.spectrum.size()))
        throw ConfigError("analyze.levels exceeds the matrix model size");
      BilinearSystem full = user_matrix_model(spec.spectrum, spec.coupling, spec.r,
                                              spec.relative_bound_a, spec.relative_bound_b);
      return levels == full.size() ? full : truncate_system(full, levels);
    }
    DeltaBoxModel model;
    model.interaction_position = spec.interaction_position;
    model.eta = strength;
    model.truncation = subspace == "even" ? 2 * levels : levels;
    BilinearSystem system = delta_box_system(model, spec.r, spec.young_epsilon);
    return subspace == "even" ? even_subspace(system) : system;
  };
  const BilinearSystem system = build(eta);

  json result{{"schema_version", 1},
              {"model", {{"type", spec.kind == ModelSpec::Kind::delta_box ? "delta_box" : "matrix"},
                         {"interaction_position", spec.interaction_position}}},
              {"levels", levels},
              {"subspace", subspace},
              {"eta", eta}};

  int exit_code = 0;
  try {
    const SpanningTree tree = spanning_tree(build_graph(system.coupling, zero_tolerance));
    const auto chain = tree_edges(tree);
    const NonresonanceReport report = check_nonresonance(system.spectrum, system.coupling, chain,
                                                         gap_tolerance, zero_tolerance);
    json edges = json::array();
    for (const auto& [i, j] : chain) edges.push_back({i, j});
    result["chain_edges"] = std::move(edges);
    result["chain"] = nonresonance_json(report);
    result["certified"] = report.ok();
    exit_code = report.ok() ? 0 : 2;
    if (opts.verbose || !report.ok())
      std::fprintf(stderr, "analyze: %zu first-kind and %zu second-kind violations on %d levels\n",
                   report.violations_a1.size(), report.violations_a2.size(), levels);
  } catch (const disconnected_error& e) {
    result["certified"] = false;
    result["disconnected"] = e.unreachable;
    std::fprintf(stderr, "analyze: %s\n", e.what());
    exit_code = 2;
  }

  std::filesystem::create_directories(opts.out);
  cli_detail::write_json_file(std::filesystem::path(opts.out) / "analysis.json", result);
  if (opts.verbose)
    std::fprintf(stderr, "analyze: wrote %s\n",
                 (std::filesystem::path(opts.out) / "analysis.json").string().c_str());
  return exit_code;
}

namespace cli_detail {

struct ControlConfig {
  ModelSpec spec;
  std::vector<complexd> psi0;
  std::vector<complexd> psi1;
  ExperimentOptions options;
};

inline ControlConfig parse_control(const json& config) {
  ControlConfig out;
  out.spec = parse_model(config);
  const json& section = require_field(config, "config", "control");
  out.psi0 = parse_state(section, "control", "psi0");
  out.psi1 = parse_state(section, "control", "psi1");
  out.options.epsilon = get_num(section, "control", "epsilon");
  out.options.u0 = get_num(section, "control", "u0", 0.0);
  out.options.nu = get_num(section, "control", "nu", 0.5);
  out.options.samples_per_period = get_int(section, "control", "samples_per_period", 32);
  out.options.levels = get_int(section, "control", "levels", 0);
  out.options.truncation = get_int(section, "control", "truncation", 0);
  out.options.check_double_truncation = get_bool(section, "control", "check_truncation", true);
  out.options.trace_stride = get_int(section, "control", "trace_stride", 1000);
  out.options.tail0_sq = get_num(section, "control", "tail0_sq", 0.0);
  out.options.tail1_sq = get_num(section, "control", "tail1_sq", 0.0);
  out.options.rng_seed = static_cast<std::uint64_t>(get_int(section, "control", "seed", 0));
  const LiftConfig lift = parse_lift(section, "control");
  out.options.lift_enabled = lift.enabled;
  out.options.lift_eta_max = lift.eta_max;
  return out;
}

}  // namespace cli_detail

inline int cmd_control(const CliOptions& opts) {
  using namespace cli_detail;
  const json config = load_config(opts.config);
  check_schema(config);
  const ControlConfig control = parse_control(config);

  ExperimentReport report;
  try {
    report = run_controllability_experiment(control.spec, control.psi0, control.psi1,
                                            control.options);
  } catch (const disconnected_error& e) {
    std::fprintf(stderr, "control: %s\n", e.what());
    return 3;
  }

  std::filesystem::create_directories(opts.out);
  const std::filesystem::path out(opts.out);
  write_json_file(out / "report.json", report_json(report));
  write_text_file(out / "schedule.csv", schedule_csv(report.exported_schedule));
  write_text_file(out / "trace.csv", trace_csv(report.trace));
  if (opts.verbose)
    std::fprintf(stderr,
                 "control: distance %.3e (epsilon %.3e), l1 %.6f of budget %.6f, %zu segments\n",
                 report.distance, report.epsilon, report.l1, report.budget,
                 report.compiled.schedule.segments.size());
  if (!report.fidelity_ok)
    std::fprintf(stderr, "control: fidelity miss, distance %.6e >= epsilon %.6e\n",
                 report.distance, report.epsilon);
  else if (!report.budget_ok)
    std::fprintf(stderr, "control: budget miss, l1 %.6e > %.6e\n", report.l1, report.budget);
  return control_exit_code(report);
}

inline int cmd_sweep(const CliOptions& opts) {
  using namespace cli_detail;
  const json config = load_config(opts.config);
  check_schema(config);
  const ControlConfig base = parse_control(config);
  const json& section = require_field(config, "config", "sweep");
  const json& grid = require_field(section, "sweep", "grid");
  if (!grid.is_object()) throw ConfigError("config field sweep.grid must be an object");

  const auto axis_num = [&](const char* key, double fallback) {
    std::vector<double> values;
    const auto it = grid.find(key);
    if (it == grid.end()) return std::vector<double>{fallback};
    if (!it->is_array() || it->empty())
      throw ConfigError(std::string("config field sweep.grid.") + key +
                        " must be a nonempty array");
    for (const json& v : *it) {
      if (!v.is_number())
        throw ConfigError(std::string("config field sweep.grid.") + key + " must hold numbers");
      values.push_back(v.get<double>());
    }
    return values;
  };
  const auto axis_int = [&](const char* key, int fallback) {
    std::vector<int> values;
    const auto it = grid.find(key);
    if (it == grid.end()) return std::vector<int>{fallback};
    if (!it->is_array() || it->empty())
      throw ConfigError(std::string("config field sweep.grid.") + key +
                        " must be a nonempty array");
    for (const json& v : *it) {
      if (!v.is_number_integer())
        throw ConfigError(std::string("config field sweep.grid.") + key + " must hold integers");
      values.push_back(v.get<int>());
    }
    return values;
  };

  const std::vector<double> u0_axis = axis_num("u0", base.options.u0);
  const std::vector<int> spp_axis = axis_int("samples_per_period",
                                             base.options.samples_per_period);
  const std::vector<int> trunc_axis = axis_int("truncation", base.options.truncation);

  std::filesystem::create_directories(opts.out);
  const std::filesystem::path out(opts.out);
  std::string aggregate =
      "index,u0,samples_per_period,truncation,l1,distance,passed,status,runtime_seconds\n";

  int index = 0;
  bool all_ran = true;
  for (const double u0 : u0_axis)
    for (const int spp : spp_axis)
      for (const int trunc : trunc_axis) {
        ExperimentOptions options = base.options;
        options.u0 = u0;
        options.samples_per_period = spp;
        options.truncation = trunc;
        options.trace_stride = 0;  // traces stay out of sweeps

        char name[32];
        std::snprintf(name, sizeof name, "report_%03d.json", index);
        const auto started = std::chrono::steady_clock::now();
        double l1 = 0.0;
        double distance = 0.0;
        bool passed = false;
        std::string status = "ok";
        try {
          const ExperimentReport report = run_controllability_experiment(base.spec, base.psi0,
                                                                         base.psi1, options);
          l1 = report.l1;
          distance = report.distance;
          passed = report.passed;
          write_json_file(out / name, report_json(report));
        } catch (const std::exception& e) {
          status = "error";
          all_ran = false;
          std::fprintf(stderr, "sweep point %d: %s\n", index, e.what());
        }
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;

        char row[256];
        std::snprintf(row, sizeof row, "%d,%.17g,%d,%d,%.17g,%.17g,%d,%s,%.6f\n", index, u0, spp,
                      trunc, l1, distance, passed ? 1 : 0, status.c_str(), elapsed.count());
        aggregate += row;
        if (opts.verbose)
          std::fprintf(stderr, "sweep point %d: u0 %.4f spp %d truncation %d -> %s\n", index, u0,
                       spp, trunc, status.c_str());
        ++index;
      }

  write_text_file(out / "aggregate.csv", aggregate);
  return all_ran ? 0 : 1;
}

// Parses arguments and dispatches to a subcommand.  Returns the process
// exit code instead of calling exit() so tests can drive it directly.
inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"synthesize and certify steering controls for bilinear quantum systems"};
  app.require_subcommand(1);

  CliOptions analyze_opts;
  CliOptions control_opts;
  CliOptions sweep_opts;
  const auto add_common = [](CLI::App* cmd, CliOptions& opts) {
    cmd->add_option("--config", opts.config, "configuration file (JSON, schema_version 1)")
        ->required();
    cmd->add_option("--out", opts.out, "output directory (default: current directory)");
    cmd->add_option("--threads", opts.threads, "cap on worker threads")
        ->envname("QSTEER_THREADS");
    cmd->add_flag("--verbose", opts.verbose, "print progress details")
        ->envname("QSTEER_VERBOSE");
  };
  CLI::App* analyze = app.add_subcommand("analyze", "certify connectivity and nonresonance");
  add_common(analyze, analyze_opts);
  CLI::App* control = app.add_subcommand("control", "synthesize and simulate a transfer");
  add_common(control, control_opts);
  CLI::App* sweep = app.add_subcommand("sweep", "run a control over a parameter grid");
  add_common(sweep, sweep_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const CliOptions& opts = analyze->parsed()  ? analyze_opts
                           : control->parsed() ? control_opts
                                               : sweep_opts;
  if (opts.threads > 0) Eigen::setNbThreads(opts.threads);

  try {
    if (analyze->parsed()) return cmd_analyze(opts);
    if (control->parsed()) return cmd_control(opts);
    return cmd_sweep(opts);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace qsteer
