// Copyright 2026 The SafeGuardPF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// safeguardpf: run scenarios, export field grids, fuzz passive safety and
// check stored traces.
//
// Exit codes: 0 pass, 1 configuration or input error, 2 safety violation
// (fatal collision during `run`, violating record during `check`, genuine
// failures during `fuzz`).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "safeguard/bridge.h"
#include "safeguard/bridge_server.h"
#include "safeguard/field_grid.h"
#include "safeguard/scenario.h"
#include "safeguard/sim.h"
#include "safeguard/trace_io.h"
#include "safeguard/verify.h"
#include "spdlog/sinks/stdout_color_sinks.h"
#include "spdlog/spdlog.h"

namespace {

using namespace safeguard;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitViolation = 2;

std::shared_ptr<spdlog::logger> MakeLogger() {
  auto log = spdlog::stderr_color_mt("safeguardpf");
  log->set_pattern("[%l] %v");
  log->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SAFEGUARDPF_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; only honour real ones.
    if (level != spdlog::level::off || std::string(env) == "off") {
      log->set_level(level);
    } else {
      log->warn("SAFEGUARDPF_LOG: unknown level '{}'", env);
    }
  }
  return log;
}

// Writes to `path`, or stdout when it is empty or "-".
template <typename F>
void WithOutput(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write(out);
  if (!out) throw Error("write to '" + path + "' failed");
}

struct RunArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::string out;
  std::string format = "jsonl";
  bool serve = false;
  unsigned short port = 8765;
  double pace = 1.0;
  std::size_t wait_for_clients = 0;
  std::string command_log;
};

Scenario LoadWithOverrides(const std::string& path,
                           std::optional<std::uint64_t> seed,
                           std::optional<double> duration) {
  Scenario sc = LoadScenario(path);
  if (seed) sc.sim.seed = *seed;
  if (duration) {
    if (!(*duration > 0.0)) throw Error("--duration must be > 0");
    sc.sim.duration = *duration;
  }
  return sc;
}

int CmdRun(const RunArgs& a, spdlog::logger& log) {
  const Scenario sc = LoadWithOverrides(a.scenario, a.seed, a.duration);
  const TraceFormat format = *ParseTraceFormat(a.format);
  Trace trace;
  if (a.serve) {
    if (TeleopObstacleIds(sc).empty()) {
      log.info("no teleop obstacles: serving in view-only mode");
    }
    LiveSession session(sc);
    BridgeServer server(session,
                        {"127.0.0.1", a.port, a.pace, a.wait_for_clients});
    log.warn("serving on ws://127.0.0.1:{}", server.port());
    server.Run();
    trace = session.simulator().trace();
    if (!a.command_log.empty()) {
      WithOutput(a.command_log, [&](std::ostream& o) {
        WriteCommandLog(o, session.command_log());
      });
    }
    log.info("session ended; {} malformed client messages",
             session.malformed_count());
  } else if (!a.command_log.empty()) {
    std::ifstream in(a.command_log);
    if (!in) throw Error("cannot open '" + a.command_log + "'");
    trace = ReplayCommandLog(sc, ReadCommandLog(in));
  } else {
    trace = Run(sc);
  }
  WithOutput(a.out,
             [&](std::ostream& o) { WriteTrace(o, trace.records, format); });
  const SafetyVerdict verdict = CheckPassiveSafety(trace);
  log.info("stopped: {}; {} records", StopReasonName(trace.reason),
           trace.records.size());
  if (trace.reason == StopReason::kFatalCollision || !verdict.pass) {
    log.error("fatal collision at record {}",
              verdict.first_violation.value_or(trace.records.size()));
    return kExitViolation;
  }
  return kExitOk;
}

struct FieldArgs {
  std::string scenario;
  std::vector<double> region;
  double resolution = 0.0;
  std::string mode = "total";
  std::string out;
};

int CmdField(const FieldArgs& a) {
  const Scenario sc = LoadScenario(a.scenario);
  if (sc.robots.empty()) throw Error("field: scenario has no robots");
  const RobotSpec& robot = sc.robots.front();
  std::optional<Vec2> goal;
  if (!robot.plan.waypoints.empty()) goal = robot.plan.waypoints.front();
  const FieldMode mode =
      a.mode == "repulsion" ? FieldMode::kRepulsion : FieldMode::kTotal;
  const Rect region{a.region[0], a.region[1], a.region[2], a.region[3]};
  const FieldGrid grid = SampleFieldGrid(region, a.resolution, sc.obstacles,
                                         goal, robot.gains, robot.params, mode);
  WithOutput(a.out, [&](std::ostream& o) { WriteFieldCsv(o, grid); });
  return kExitOk;
}

struct FuzzArgs {
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  bool breach = false;
  bool randomize_params = false;
  std::optional<double> duration;
  unsigned threads = 0;
  std::string out;
};

int CmdFuzz(const FuzzArgs& a, spdlog::logger& log) {
  if (a.n == 0) throw Error("fuzz: --n must be > 0");
  verify::FuzzOptions opt;
  opt.runs = a.n;
  opt.seed = a.seed;
  opt.breach_assumptions = a.breach;
  opt.randomize_params = a.randomize_params;
  opt.threads = a.threads;
  if (a.duration) opt.duration = *a.duration;
  const verify::FuzzReport report = verify::FuzzPassiveSafety(opt);
  WithOutput(a.out, [&](std::ostream& o) {
    o << verify::FuzzReportToJson(report).dump(2) << '\n';
  });
  const std::size_t genuine = report.GenuineFailures();
  log.info("{} runs, {} failures ({} genuine)", report.runs,
           report.failures.size(), genuine);
  if (genuine > 0) {
    log.error("{} passive-safety violations", genuine);
    return kExitViolation;
  }
  return kExitOk;
}

int CmdCheck(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  const std::vector<TraceRecord> records = ReadTrace(in);
  const SafetyVerdict verdict = CheckPassiveSafety(records);
  if (verdict.pass) {
    std::cout << "pass: " << records.size() << " records\n";
    return kExitOk;
  }
  const TraceRecord& r = records[*verdict.first_violation];
  std::cout << "violation: record " << *verdict.first_violation << " (t=" << r.t
            << ", robot " << r.robot << ", v=" << r.v << ")\n";
  return kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  auto log = MakeLogger();
  CLI::App app{"Passively safe potential-field navigation toolkit"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd =
      app.add_subcommand("run", "Simulate a scenario and write its trace");
  run_cmd->add_option("--scenario", run.scenario, "Scenario JSON")->required();
  run_cmd->add_option("--seed", run.seed, "Override the scenario seed");
  run_cmd->add_option("--duration", run.duration, "Override the duration [s]");
  run_cmd->add_option("--out", run.out, "Trace output (default stdout)");
  run_cmd->add_option("--format", run.format)
      ->check(CLI::IsMember({"jsonl", "csv"}));
  run_cmd->add_flag("--serve", run.serve, "Run live behind a WebSocket server");
  run_cmd->add_option("--port", run.port, "Server port (0 picks one)");
  run_cmd->add_option("--pace", run.pace, "Simulated seconds per wall second")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--wait-for-clients", run.wait_for_clients,
                      "Hold the simulation until N clients connect");
  run_cmd->add_option("--command-log", run.command_log,
                      "With --serve: write teleop commands here. Without: "
                      "replay commands from this file");

  FieldArgs field;
  auto* field_cmd =
      app.add_subcommand("field", "Sample the potential field on a grid (CSV)");
  field_cmd->add_option("--scenario", field.scenario)->required();
  field_cmd->add_option("--region", field.region, "xmin,xmax,ymin,ymax")
      ->delimiter(',')
      ->expected(4)
      ->required();
  field_cmd->add_option("--resolution", field.resolution, "Grid spacing [m]")
      ->required();
  field_cmd->add_option("--mode", field.mode)
      ->check(CLI::IsMember({"repulsion", "total"}));
  field_cmd->add_option("--out", field.out);

  FuzzArgs fuzz;
  auto* fuzz_cmd =
      app.add_subcommand("fuzz", "Randomized passive-safety check");
  fuzz_cmd->add_option("--n", fuzz.n, "Number of runs");
  fuzz_cmd->add_option("--seed", fuzz.seed);
  fuzz_cmd->add_option("--duration", fuzz.duration, "Per-run duration [s]");
  fuzz_cmd->add_flag("--breach-assumptions", fuzz.breach,
                     "Obstacles exceed V; failures are labelled, not fatal");
  fuzz_cmd->add_flag("--randomize-params", fuzz.randomize_params);
  fuzz_cmd->add_option("--threads", fuzz.threads, "0 = all cores");
  fuzz_cmd->add_option("--out", fuzz.out, "Report JSON (default stdout)");

  std::string trace_path;
  auto* check_cmd =
      app.add_subcommand("check", "Check a stored trace for passive safety");
  check_cmd->add_option("trace", trace_path, "Trace file (JSONL or CSV)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*run_cmd) return CmdRun(run, *log);
    if (*field_cmd) return CmdField(field);
    if (*fuzz_cmd) return CmdFuzz(fuzz, *log);
    if (*check_cmd) return CmdCheck(trace_path);
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kExitError;
  }
  return kExitError;
}
