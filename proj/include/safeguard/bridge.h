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

#ifndef SAFEGUARD_BRIDGE_H_
#define SAFEGUARD_BRIDGE_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "safeguard/core.h"
#include "safeguard/sim.h"
#include "safeguard/trace_io.h"

// Live-session plumbing that does not depend on a transport: the wire
// protocol, the teleop mailbox, the command log and its headless replay.
namespace safeguard {

inline constexpr int kProtocolVersion = 1;

// ---------------------------------------------------------------------------
// Server -> client

struct SessionFlags {
  bool paused = false;
  bool done = false;
  StopReason reason = StopReason::kRunning;
  std::uint64_t malformed_messages = 0;
};

inline const char* StopReasonName(StopReason r) {
  switch (r) {
    case StopReason::kRunning:
      return "running";
    case StopReason::kDuration:
      return "duration";
    case StopReason::kGoalsReached:
      return "goals_reached";
    case StopReason::kFatalCollision:
      return "fatal_collision";
  }
  return "unknown";
}

namespace bridge_detail {

inline nlohmann::ordered_json XY(Vec2 p) {
  return nlohmann::ordered_json::array({p.x, p.y});
}

inline nlohmann::ordered_json ShapeToJson(const Shape& shape) {
  nlohmann::ordered_json j;
  if (const auto* disc = std::get_if<Disc>(&shape)) {
    j["type"] = "disc";
    j["center"] = XY(disc->center);
    j["radius"] = disc->radius;
  } else {
    const auto& poly = std::get<Polygon>(shape);
    j["type"] = "polygon";
    j["vertices"] = nlohmann::ordered_json::array();
    for (Vec2 v : poly.vertices) j["vertices"].push_back(XY(v));
  }
  return j;
}

inline const char* MotionName(const Motion& m) {
  switch (m.index()) {
    case 0:
      return "static";
    case 1:
      return "scripted";
    case 2:
      return "pursuit";
    default:
      return "teleop";
  }
}

}  // namespace bridge_detail

// One self-describing state message. `perceptions` and `commands` are
// parallel to world.robots and may be empty before the first cycle.
inline std::string EncodeState(const WorldState& world,
                               const std::vector<Command>& commands,
                               const std::vector<Perception>& perceptions,
                               std::size_t cycle, const SessionFlags& flags) {
  using detail::NumberOrNull;
  using nlohmann::ordered_json;
  ordered_json j;
  j["version"] = kProtocolVersion;
  j["type"] = "state";
  j["cycle"] = cycle;
  j["t"] = world.time;
  j["robots"] = ordered_json::array();
  for (std::size_t i = 0; i < world.robots.size(); ++i) {
    const RobotState& r = world.robots[i];
    const bool have_cmd = i < commands.size();
    const bool have_per = i < perceptions.size();
    ordered_json jr;
    jr["id"] = i;
    jr["x"] = r.pose.position.x;
    jr["y"] = r.pose.position.y;
    jr["theta"] = r.pose.theta;
    jr["v"] = r.v;
    jr["omega"] = r.omega;
    jr["radius"] = i < world.robot_radii.size() ? world.robot_radii[i] : 0.0;
    jr["mode"] = std::string(ModeName(r.mode));
    jr["d"] = have_per ? NumberOrNull(perceptions[i].d) : nullptr;
    jr["alpha"] = have_per && perceptions[i].HasObstacle()
                      ? ordered_json(perceptions[i].alpha)
                      : nullptr;
    jr["v_star"] = have_cmd ? NumberOrNull(commands[i].v_star) : nullptr;
    jr["omega_star"] =
        have_cmd ? ordered_json(commands[i].omega_star) : nullptr;
    j["robots"].push_back(std::move(jr));
  }
  j["obstacles"] = ordered_json::array();
  for (std::size_t i = 0; i < world.obstacles.size(); ++i) {
    const Obstacle& o = world.obstacles[i];
    ordered_json jo;
    jo["id"] = i;
    jo["shape"] = bridge_detail::ShapeToJson(o.shape);
    jo["pose"] = {{"x", o.position.x}, {"y", o.position.y}};
    jo["motion"] = bridge_detail::MotionName(o.motion);
    jo["speed_limit"] = o.speed_limit;
    j["obstacles"].push_back(std::move(jo));
  }
  j["flags"] = {{"paused", flags.paused},
                {"done", flags.done},
                {"reason", StopReasonName(flags.reason)},
                {"malformed_messages", flags.malformed_messages}};
  return j.dump();
}

// ---------------------------------------------------------------------------
// Client -> server

struct TeleopCommand {
  std::size_t obstacle_id = 0;
  Vec2 velocity;
};
struct PauseCommand {};
struct ResumeCommand {};
struct ResetCommand {};

using ClientMessage =
    std::variant<TeleopCommand, PauseCommand, ResumeCommand, ResetCommand>;

// Returns nullopt for anything that is not a well-formed message of the
// current protocol version.
inline std::optional<ClientMessage> ParseClientMessage(std::string_view text) {
  const auto j =
      nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (!j.is_object()) return std::nullopt;
  const auto version = j.find("version");
  if (version == j.end() || !version->is_number_integer() ||
      version->get<std::int64_t>() != kProtocolVersion) {
    return std::nullopt;
  }
  const auto type = j.find("type");
  if (type == j.end() || !type->is_string()) return std::nullopt;
  const std::string& t = type->get_ref<const std::string&>();
  if (t == "pause") return PauseCommand{};
  if (t == "resume") return ResumeCommand{};
  if (t == "reset") return ResetCommand{};
  if (t != "teleop") return std::nullopt;
  const auto id = j.find("obstacle_id");
  const auto vx = j.find("vx");
  const auto vy = j.find("vy");
  if (id == j.end() || vx == j.end() || vy == j.end()) return std::nullopt;
  if (!id->is_number_unsigned() || !vx->is_number() || !vy->is_number()) {
    return std::nullopt;
  }
  TeleopCommand cmd{id->get<std::size_t>(),
                    {vx->get<double>(), vy->get<double>()}};
  if (!cmd.velocity.IsFinite()) return std::nullopt;
  return cmd;
}

// ---------------------------------------------------------------------------
// Command log

struct LoggedCommand {
  std::size_t cycle = 0;
  std::size_t obstacle_id = 0;
  Vec2 velocity;

  bool operator==(const LoggedCommand&) const = default;
};

inline void WriteCommandLog(std::ostream& out,
                            const std::vector<LoggedCommand>& log) {
  for (const LoggedCommand& c : log) {
    nlohmann::ordered_json j;
    j["cycle"] = c.cycle;
    j["obstacle_id"] = c.obstacle_id;
    j["vx"] = c.velocity.x;
    j["vy"] = c.velocity.y;
    out << j.dump() << '\n';
  }
}

inline std::vector<LoggedCommand> ReadCommandLog(std::istream& in) {
  std::vector<LoggedCommand> log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    auto fail = [&](const std::string& what) {
      return Error("command log line " + std::to_string(line_no) + ": " + what);
    };
    if (!j.is_object()) throw fail("not a JSON object");
    for (const char* key : {"cycle", "obstacle_id"}) {
      if (!j.contains(key) || !j[key].is_number_unsigned()) {
        throw fail(std::string("missing or invalid '") + key + "'");
      }
    }
    for (const char* key : {"vx", "vy"}) {
      if (!j.contains(key) || !j[key].is_number()) {
        throw fail(std::string("missing or invalid '") + key + "'");
      }
    }
    LoggedCommand c{j["cycle"].get<std::size_t>(),
                    j["obstacle_id"].get<std::size_t>(),
                    {j["vx"].get<double>(), j["vy"].get<double>()}};
    if (!log.empty() && c.cycle < log.back().cycle) {
      throw fail("cycles out of order");
    }
    log.push_back(c);
  }
  return log;
}

// Re-runs a scenario headlessly, feeding each logged command at its cycle.
inline Trace ReplayCommandLog(const Scenario& scenario,
                              const std::vector<LoggedCommand>& log) {
  Simulator sim(scenario);
  std::size_t next = 0;
  while (!sim.done()) {
    TeleopInputs inputs;
    for (; next < log.size() && log[next].cycle <= sim.cycle_index(); ++next) {
      inputs[log[next].obstacle_id] = log[next].velocity;
    }
    sim.StepCycle(inputs);
  }
  return sim.trace();
}

// ---------------------------------------------------------------------------
// Mailbox and session

// Latest command per teleop obstacle, written by client threads and drained
// by the simulation once per cycle. Commands for obstacles that are not
// teleoperated are refused.
class TeleopMailbox {
 public:
  explicit TeleopMailbox(std::set<std::size_t> accepted)
      : accepted_(std::move(accepted)) {}

  bool Post(const TeleopCommand& cmd) {
    if (!accepted_.count(cmd.obstacle_id) || !cmd.velocity.IsFinite()) {
      return false;
    }
    std::lock_guard<std::mutex> lock(mu_);
    pending_[cmd.obstacle_id] = cmd.velocity;
    return true;
  }

  TeleopInputs Drain() {
    std::lock_guard<std::mutex> lock(mu_);
    TeleopInputs out;
    out.swap(pending_);
    return out;
  }

  void Clear() {
    std::lock_guard<std::mutex> lock(mu_);
    pending_.clear();
  }

 private:
  const std::set<std::size_t> accepted_;
  std::mutex mu_;
  TeleopInputs pending_;
};

inline std::set<std::size_t> TeleopObstacleIds(const Scenario& scenario) {
  std::set<std::size_t> ids;
  for (std::size_t i = 0; i < scenario.obstacles.size(); ++i) {
    if (std::holds_alternative<TeleopMotion>(scenario.obstacles[i].motion)) {
      ids.insert(i);
    }
  }
  return ids;
}

// A simulation that accepts client messages from any thread and advances
// one control cycle per Tick() on the simulation thread. Teleop commands
// received before a tick are applied in that tick's cycle and logged under
// its index, so ReplayCommandLog reproduces the trace exactly.
class LiveSession {
 public:
  explicit LiveSession(Scenario scenario)
      : scenario_(std::move(scenario)),
        sim_(std::make_unique<Simulator>(scenario_)),
        mailbox_(TeleopObstacleIds(scenario_)) {}

  // Thread-safe. Returns false if the message was ignored.
  bool Submit(std::string_view text) {
    const std::optional<ClientMessage> msg = ParseClientMessage(text);
    bool ok = msg.has_value();
    if (ok) {
      ok = std::visit(
          [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            std::lock_guard<std::mutex> lock(mu_);
            if constexpr (std::is_same_v<T, TeleopCommand>) {
              return mailbox_.Post(m);
            } else if constexpr (std::is_same_v<T, PauseCommand>) {
              paused_ = true;
            } else if constexpr (std::is_same_v<T, ResumeCommand>) {
              paused_ = false;
            } else {
              reset_requested_ = true;
            }
            return true;
          },
          *msg);
    }
    if (!ok) {
      std::lock_guard<std::mutex> lock(mu_);
      ++malformed_;
    }
    return ok;
  }

  // Simulation thread only. Advances one cycle unless paused or finished.
  // Returns true if a cycle ran.
  bool Tick() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (reset_requested_) {
        reset_requested_ = false;
        sim_ = std::make_unique<Simulator>(scenario_);
        log_.clear();
        mailbox_.Clear();
      }
      if (paused_) return false;
    }
    if (sim_->done()) return false;
    const TeleopInputs inputs = mailbox_.Drain();
    for (const auto& [id, vel] : inputs) {
      log_.push_back({sim_->cycle_index(), id, vel});
    }
    sim_->StepCycle(inputs);
    return true;
  }

  // Simulation thread only.
  std::string StateMessage() const {
    return EncodeState(sim_->world(), sim_->commands(), sim_->perceptions(),
                       sim_->cycle_index(), flags());
  }

  SessionFlags flags() const {
    std::lock_guard<std::mutex> lock(mu_);
    return {paused_, sim_->done(), sim_->trace().reason, malformed_};
  }

  bool paused() const {
    std::lock_guard<std::mutex> lock(mu_);
    return paused_;
  }
  bool done() const { return sim_->done(); }
  std::uint64_t malformed_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return malformed_;
  }
  const Simulator& simulator() const { return *sim_; }
  const Scenario& scenario() const { return scenario_; }
  const std::vector<LoggedCommand>& command_log() const { return log_; }

 private:
  const Scenario scenario_;
  std::unique_ptr<Simulator> sim_;
  TeleopMailbox mailbox_;
  std::vector<LoggedCommand> log_;
  mutable std::mutex mu_;
  bool paused_ = false;
  bool reset_requested_ = false;
  std::uint64_t malformed_ = 0;
};

}  // namespace safeguard

#endif  // SAFEGUARD_BRIDGE_H_
