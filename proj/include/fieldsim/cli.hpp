#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.
//
// Exit codes: 0 success, 1 invalid input (validation, malformed telemetry,
// replay mismatch), 2 unreadable or unwritable file.

#include <csignal>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fieldsim/http_api.hpp"
#include "fieldsim/json_io.hpp"
#include "fieldsim/scenario.hpp"
#include "fieldsim/service.hpp"
#include "fieldsim/simulation.hpp"
#include "fieldsim/telemetry.hpp"

namespace fieldsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitIo = 2;

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

inline void print_errors(std::ostream& err, const ValidationErrors& errs) {
  for (const auto& e : errs) err << "error: " << e.to_string() << '\n';
}

/// Loads a scenario; on failure prints the problem and sets `code`.
inline std::optional<ScenarioConfig> load(const std::string& path, Streams io, int& code) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    io.err << "error: " << e.what() << '\n';
    code = kExitIo;
    return std::nullopt;
  }
  auto result = load_scenario(std::string_view(text));
  if (!result.ok()) {
    io.err << path << ": " << result.errors.size() << " validation error(s)\n";
    print_errors(io.err, result.errors);
    code = kExitInvalid;
    return std::nullopt;
  }
  return std::move(result.config);
}

inline std::optional<std::vector<TelemetryRecord>> load_telemetry(const std::string& path, Streams io, int& code) {
  try {
    return parse_csv(read_file(path));
  } catch (const IoError& e) {
    io.err << "error: " << e.what() << '\n';
    code = kExitIo;
  } catch (const ParseError& e) {
    io.err << "error: " << path << ": " << e.what() << '\n';
    code = kExitInvalid;
  }
  return std::nullopt;
}

inline std::string report_json(const SdgMetricsReport& r) { return to_json(r).dump(2) + "\n"; }

struct RunOptions {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string format = "both";
};

inline int cmd_run(const RunOptions& opt, Streams io) {
  int code = kExitOk;
  auto cfg = load(opt.scenario, io, code);
  if (!cfg) return code;
  if (opt.seed) cfg->seed = *opt.seed;

  Simulation sim(*cfg);
  sim.run_to_end();
  const SimResult res = sim.result();
  const auto& records = res.telemetry.records();

  namespace fs = std::filesystem;
  const fs::path dir(opt.out);
  try {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    const bool csv = opt.format != "json";
    const bool json = opt.format != "csv";
    if (csv) {
      write_file((dir / "telemetry.csv").string(), export_csv(records));
      write_file((dir / "commands.csv").string(), commands_csv(records, res.commands));
      write_file((dir / "alerts.csv").string(), alerts_csv(records));
    }
    if (json && !csv) {
      write_file((dir / "telemetry.json").string(), export_json(records).dump(1) + "\n");
      ojson cmds = ojson::array();
      for (const auto& c : res.commands) cmds.push_back(to_json(c));
      write_file((dir / "commands.json").string(), cmds.dump(1) + "\n");
      ojson alerts = ojson::array();
      for (const auto& r : records)
        if (const auto* a = std::get_if<Alert>(&r.payload)) alerts.push_back(to_json(*a));
      write_file((dir / "alerts.json").string(), alerts.dump(1) + "\n");
    }
    if (json) write_file((dir / "report.json").string(), report_json(res.report));
    write_file((dir / "report.txt").string(), to_text(res.report));
  } catch (const IoError& e) {
    io.err << "error: " << e.what() << '\n';
    return kExitIo;
  }

  io.out << "run " << cfg->run_id() << ": " << res.telemetry.size() << " records, " << res.commands.size()
         << " commands, " << res.diagnostics.scheduled_rounds << " sampling rounds\n\n"
         << to_text(res.report);
  return kExitOk;
}

struct ReplayOptions {
  std::string scenario;
  std::string telemetry;
  std::string rules;  // optional JSON patch file
  std::vector<std::string> set;  // key=value patches
  bool check = false;
};

inline int cmd_replay(const ReplayOptions& opt, Streams io) {
  int code = kExitOk;
  auto cfg = load(opt.scenario, io, code);
  if (!cfg) return code;
  auto records = load_telemetry(opt.telemetry, io, code);
  if (!records) return code;

  nlohmann::json patch_doc = nlohmann::json::object();
  if (!opt.rules.empty()) {
    std::string text;
    try {
      text = read_file(opt.rules);
    } catch (const IoError& e) {
      io.err << "error: " << e.what() << '\n';
      return kExitIo;
    }
    patch_doc = nlohmann::json::parse(text, nullptr, false);
    if (patch_doc.is_discarded()) {
      io.err << "error: " << opt.rules << ": not valid JSON\n";
      return kExitInvalid;
    }
  }
  for (const auto& kv : opt.set) {
    const auto eq = kv.find('=');
    double v = 0;
    if (eq == std::string::npos || !csv::parse_number(kv.substr(eq + 1), v)) {
      io.err << "error: --set expects key=number, got '" << kv << "'\n";
      return kExitInvalid;
    }
    patch_doc[kv.substr(0, eq)] = v;
  }
  ValidationErrors errs;
  const RulePatch patch = parse_rule_patch(patch_doc, errs);
  RuleConfig rules = cfg->rules;
  if (errs.empty()) {
    try {
      rules = update_rules(rules, patch);
    } catch (const ValidationFailure& e) {
      errs = e.errors();
    }
  }
  if (!errs.empty()) {
    print_errors(io.err, errs);
    return kExitInvalid;
  }

  std::vector<ActuatorCommand> trace;
  try {
    trace = replay(*records, rules, *cfg);
  } catch (const std::runtime_error& e) {
    io.err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  std::vector<TelemetryRecord> as_records;
  for (const auto& c : trace) as_records.push_back({c.timestamp, 0, cfg->run_id(), c});
  io.out << commands_csv(as_records);

  if (opt.check) {
    const auto recorded = recorded_commands(*records);
    if (recorded != trace) {
      io.err << "replay differs from recorded commands (" << trace.size() << " vs " << recorded.size() << ")\n";
      return kExitInvalid;
    }
    io.err << "replay matches " << recorded.size() << " recorded commands\n";
  }
  return kExitOk;
}

struct ReportOptions {
  std::string telemetry;
  std::string scenario;  // for sprinkler inventory, flow rate and baseline; defaults otherwise
  bool text = false;
};

inline int cmd_report(const ReportOptions& opt, Streams io) {
  int code = kExitOk;
  ScenarioConfig cfg;
  if (!opt.scenario.empty()) {
    auto loaded = load(opt.scenario, io, code);
    if (!loaded) return code;
    cfg = std::move(*loaded);
  } else {
    cfg = *load_scenario(std::string_view("{}")).config;
  }
  auto records = load_telemetry(opt.telemetry, io, code);
  if (!records) return code;
  const auto report = summarize(*records, metrics_context(cfg));
  io.out << (opt.text ? to_text(report) : report_json(report));
  return kExitOk;
}

inline int cmd_validate(const std::string& scenario, Streams io) {
  int code = kExitOk;
  auto cfg = load(scenario, io, code);
  if (!cfg) return code;
  io.out << scenario << ": ok (" << cfg->sensors.size() << " sensors, " << cfg->actuators.size() << " actuators, "
         << cfg->zones.size() << " zones)\n";
  return kExitOk;
}

struct ServeOptions {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  double pace = 1.0;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
};

inline httplib::Server* g_server = nullptr;

inline int cmd_serve(const ServeOptions& opt, Streams io) {
  int code = kExitOk;
  auto cfg = load(opt.scenario, io, code);
  if (!cfg) return code;
  if (opt.seed) cfg->seed = *opt.seed;

  GatewayService service;
  service.start(*cfg, {opt.pace, 4096});
  httplib::Server server;
  mount_api(server, service, opt.static_dir);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  io.out << "serving " << cfg->run_id() << " on http://" << opt.host << ":" << opt.port << " (pace " << opt.pace
         << " sim-min/s)" << std::endl;
  const bool ok = server.listen(opt.host, opt.port);
  g_server = nullptr;
  service.stop();
  if (!ok) {
    io.err << "error: cannot listen on " << opt.host << ":" << opt.port << '\n';
    return kExitIo;
  }
  return kExitOk;
}

/// Entry point. `args` excludes the program name.
inline int main(std::vector<std::string> args, Streams io) {
  CLI::App app{"Field simulator: runs irrigation and monitoring scenarios"};
  app.require_subcommand(1);

  RunOptions run_opt;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "simulate a scenario and write telemetry and reports");
  run->add_option("--scenario", run_opt.scenario, "scenario file")->required();
  auto* run_seed = run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--out", run_opt.out, "output directory")->capture_default_str();
  run->add_option("--format", run_opt.format, "json, csv or both")
      ->check(CLI::IsMember({"json", "csv", "both"}))
      ->capture_default_str();

  ReplayOptions replay_opt;
  auto* rep = app.add_subcommand("replay", "re-derive controller commands from recorded readings");
  rep->add_option("--scenario", replay_opt.scenario, "scenario the telemetry came from")->required();
  rep->add_option("--telemetry", replay_opt.telemetry, "telemetry.csv")->required();
  rep->add_option("--rules", replay_opt.rules, "JSON rule patch file");
  rep->add_option("--set", replay_opt.set, "rule patch key=value (repeatable)");
  rep->add_flag("--check", replay_opt.check, "fail unless the trace equals the recorded commands");

  ReportOptions report_opt;
  auto* report = app.add_subcommand("report", "recompute the resource-usage report from telemetry");
  report->add_option("--telemetry", report_opt.telemetry, "telemetry.csv")->required();
  report->add_option("--scenario", report_opt.scenario, "scenario file (default deployment if omitted)");
  report->add_flag("--text", report_opt.text, "human-readable output");

  std::string validate_path;
  auto* val = app.add_subcommand("validate", "check a scenario file and list every error");
  val->add_option("--scenario,scenario", validate_path, "scenario file")->required();

  ServeOptions serve_opt;
  auto* serve = app.add_subcommand("serve", "run a scenario in real time behind the HTTP API");
  serve->add_option("--scenario", serve_opt.scenario, "scenario file")->required();
  auto* serve_seed = serve->add_option("--seed", seed, "override the scenario seed");
  serve->add_option("--pace", serve_opt.pace, "sim-minutes per wall-second (0 = as fast as possible)")
      ->capture_default_str();
  serve->add_option("--host", serve_opt.host)->capture_default_str();
  serve->add_option("--port", serve_opt.port)->capture_default_str();
  serve->add_option("--static", serve_opt.static_dir, "directory of dashboard assets to serve at /");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    io.out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    io.err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  if (*run) {
    if (*run_seed) run_opt.seed = seed;
    return cmd_run(run_opt, io);
  }
  if (*rep) return cmd_replay(replay_opt, io);
  if (*report) return cmd_report(report_opt, io);
  if (*val) return cmd_validate(validate_path, io);
  if (*serve_seed) serve_opt.seed = seed;
  return cmd_serve(serve_opt, io);
}

}  // namespace fieldsim::cli
