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

#include "safeguard/bridge.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "boost/beast/core.hpp"
#include "boost/beast/websocket.hpp"
#include "gtest/gtest.h"
#include "json.hpp"
#include "safeguard/bridge_server.h"
#include "safeguard/scenario.h"
#include "safeguard/trace_io.h"

namespace safeguard {
namespace {

using nlohmann::json;

std::string ScenarioPath(const std::string& name) {
  const char* dir = std::getenv("SAFEGUARD_SCENARIOS");
  return std::string(dir ? dir : "scenarios") + "/" + name;
}

Scenario HumanObstacle(double duration) {
  Scenario sc = LoadScenario(ScenarioPath("human_obstacle.json"));
  sc.sim.duration = duration;
  return sc;
}

std::size_t TeleopId(const Scenario& sc) {
  const std::set<std::size_t> ids = TeleopObstacleIds(sc);
  EXPECT_EQ(ids.size(), 1u);
  return *ids.begin();
}

std::string Teleop(std::size_t id, double vx, double vy) {
  return json{{"version", 1},
              {"type", "teleop"},
              {"obstacle_id", id},
              {"vx", vx},
              {"vy", vy}}
      .dump();
}

TEST(EncodeStateTest, Schema) {
  const Scenario sc = HumanObstacle(5.0);
  Simulator sim(sc);
  sim.StepCycle();
  const json j =
      json::parse(EncodeState(sim.world(), sim.commands(), sim.perceptions(),
                              sim.cycle_index(), SessionFlags{}));
  EXPECT_EQ(j["version"], kProtocolVersion);
  EXPECT_EQ(j["type"], "state");
  EXPECT_EQ(j["cycle"], 1);
  ASSERT_EQ(j["robots"].size(), 1u);
  const json& r = j["robots"][0];
  for (const char* key : {"id", "x", "y", "theta", "v", "omega", "radius",
                          "mode", "d", "alpha", "v_star", "omega_star"}) {
    EXPECT_TRUE(r.contains(key)) << key;
  }
  EXPECT_DOUBLE_EQ(r["radius"].get<double>(), 0.3);
  ASSERT_EQ(j["obstacles"].size(), sc.obstacles.size());
  const json& teleop = j["obstacles"][TeleopId(sc)];
  EXPECT_EQ(teleop["motion"], "teleop");
  EXPECT_EQ(teleop["shape"]["type"], "disc");
  EXPECT_EQ(j["flags"]["reason"], "running");
  EXPECT_EQ(j["flags"]["paused"], false);
}

TEST(EncodeStateTest, EmptyWorldAndBrakeMode) {
  WorldState w;
  w.robots.push_back({});
  w.robots[0].mode = Mode::kBrake;
  const json j = json::parse(EncodeState(w, {}, {}, 0, SessionFlags{}));
  EXPECT_TRUE(j["obstacles"].is_array());
  EXPECT_TRUE(j["obstacles"].empty());
  EXPECT_EQ(j["robots"][0]["mode"], "Brake");
  EXPECT_TRUE(j["robots"][0]["d"].is_null());
  EXPECT_TRUE(j["robots"][0]["v_star"].is_null());
}

TEST(ParseClientMessageTest, AcceptsWellFormed) {
  const auto m = ParseClientMessage(Teleop(3, 0.5, -0.25));
  ASSERT_TRUE(m);
  const auto* t = std::get_if<TeleopCommand>(&*m);
  ASSERT_NE(t, nullptr);
  EXPECT_EQ(t->obstacle_id, 3u);
  EXPECT_EQ(t->velocity, (Vec2{0.5, -0.25}));
  EXPECT_TRUE(std::holds_alternative<PauseCommand>(
      *ParseClientMessage(R"({"version":1,"type":"pause"})")));
  EXPECT_TRUE(std::holds_alternative<ResumeCommand>(
      *ParseClientMessage(R"({"version":1,"type":"resume"})")));
  EXPECT_TRUE(std::holds_alternative<ResetCommand>(
      *ParseClientMessage(R"({"version":1,"type":"reset"})")));
}

TEST(ParseClientMessageTest, RejectsMalformed) {
  for (const char* bad : {
           "",
           "not json",
           "[]",
           R"({"type":"pause"})",
           R"({"version":2,"type":"pause"})",
           R"({"version":"1","type":"pause"})",
           R"({"version":1})",
           R"({"version":1,"type":"fly"})",
           R"({"version":1,"type":"teleop","obstacle_id":0,"vx":1})",
           R"({"version":1,"type":"teleop","obstacle_id":-1,"vx":1,"vy":0})",
           R"({"version":1,"type":"teleop","obstacle_id":0,"vx":"1","vy":0})",
           R"({"version":1,"type":"teleop","obstacle_id":0.5,"vx":1,"vy":0})",
       }) {
    EXPECT_FALSE(ParseClientMessage(bad)) << bad;
  }
}

TEST(CommandLogTest, RoundTrip) {
  const std::vector<LoggedCommand> log = {{0, 4, {0.5, 0.0}},
                                          {7, 4, {-0.1, 0.3}}};
  std::stringstream s;
  WriteCommandLog(s, log);
  const std::vector<LoggedCommand> back = ReadCommandLog(s);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].cycle, 7u);
  EXPECT_EQ(back[1].obstacle_id, 4u);
  EXPECT_EQ(back[1].velocity, (Vec2{-0.1, 0.3}));

  std::stringstream unordered(
      "{\"cycle\":5,\"obstacle_id\":0,\"vx\":0,\"vy\":0}\n"
      "{\"cycle\":2,\"obstacle_id\":0,\"vx\":0,\"vy\":0}\n");
  try {
    ReadCommandLog(unordered);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(LiveSessionTest, MalformedMessagesAreCountedAndIgnored) {
  const Scenario sc = HumanObstacle(1.0);
  LiveSession session(sc);
  EXPECT_FALSE(session.Submit("{"));
  EXPECT_FALSE(session.Submit(R"({"version":1,"type":"fly"})"));
  // Robots and walls cannot be steered.
  EXPECT_FALSE(session.Submit(Teleop(TeleopId(sc) + 100, 0.1, 0.0)));
  EXPECT_FALSE(session.Submit(Teleop(TeleopId(sc) == 0 ? 1 : 0, 0.1, 0.0)));
  EXPECT_EQ(session.malformed_count(), 4u);
  EXPECT_TRUE(session.Tick());
  EXPECT_EQ(json::parse(session.StateMessage())["flags"]["malformed_messages"],
            4);
  EXPECT_TRUE(session.command_log().empty());
}

TEST(LiveSessionTest, TeleopHoldsStillWithoutClient) {
  const Scenario sc = HumanObstacle(3.0);
  LiveSession session(sc);
  const Vec2 start = sc.obstacles[TeleopId(sc)].position;
  while (session.Tick()) {
  }
  EXPECT_EQ(session.simulator().world().obstacles[TeleopId(sc)].position,
            start);
}

TEST(LiveSessionTest, CommandAppliesInNextCycleAndIsClamped) {
  const Scenario sc = HumanObstacle(5.0);
  const std::size_t id = TeleopId(sc);
  const double limit = sc.obstacles[id].speed_limit;
  LiveSession session(sc);
  ASSERT_TRUE(session.Tick());
  const Vec2 before = session.simulator().world().obstacles[id].position;
  const double t0 = session.simulator().world().time;
  ASSERT_TRUE(session.Submit(Teleop(id, -2.0 * limit, 0.0)));
  ASSERT_TRUE(session.Tick());
  const Vec2 after = session.simulator().world().obstacles[id].position;
  const double dt = session.simulator().world().time - t0;
  EXPECT_NEAR(after.x - before.x, -limit * dt, 1e-12);
  EXPECT_NEAR(after.y, before.y, 1e-12);
  ASSERT_EQ(session.command_log().size(), 1u);
  EXPECT_EQ(session.command_log()[0].cycle, 1u);
}

TEST(LiveSessionTest, PauseResumeReset) {
  LiveSession session(HumanObstacle(5.0));
  ASSERT_TRUE(session.Tick());
  ASSERT_TRUE(session.Submit(R"({"version":1,"type":"pause"})"));
  EXPECT_FALSE(session.Tick());
  EXPECT_TRUE(session.flags().paused);
  const std::size_t cycle = session.simulator().cycle_index();
  ASSERT_TRUE(session.Submit(R"({"version":1,"type":"resume"})"));
  EXPECT_TRUE(session.Tick());
  EXPECT_EQ(session.simulator().cycle_index(), cycle + 1);
  ASSERT_TRUE(session.Submit(R"({"version":1,"type":"reset"})"));
  EXPECT_TRUE(session.Tick());
  EXPECT_EQ(session.simulator().cycle_index(), 1u);
}

// An adversary steering straight at the robot at full speed, with the
// session replayed headlessly from its command log.
TEST(LiveSessionTest, AdversarialSessionIsSafeAndReplays) {
  const Scenario sc = HumanObstacle(40.0);
  const std::size_t id = TeleopId(sc);
  const double limit = sc.obstacles[id].speed_limit;
  LiveSession session(sc);
  std::size_t steps = 0;
  do {
    const WorldState& w = session.simulator().world();
    const Vec2 to_robot = w.robots[0].pose.position - w.obstacles[id].position;
    // Refresh only every third cycle so replay covers held commands too.
    if (steps % 3 == 0 && to_robot.Norm() > 0.0) {
      const Vec2 v = to_robot * (limit / to_robot.Norm());
      ASSERT_TRUE(session.Submit(Teleop(id, v.x, v.y)));
    }
    ++steps;
  } while (session.Tick());

  const Trace& live = session.simulator().trace();
  EXPECT_TRUE(CheckPassiveSafety(live.records).pass);
  EXPECT_TRUE(std::any_of(live.records.begin(), live.records.end(),
                          [](const TraceRecord& r) { return r.d < 0.5; }));

  std::stringstream log;
  WriteCommandLog(log, session.command_log());
  const Trace replay = ReplayCommandLog(sc, ReadCommandLog(log));
  EXPECT_EQ(TraceToString(replay.records, TraceFormat::kJsonl),
            TraceToString(live.records, TraceFormat::kJsonl));
  EXPECT_EQ(replay.reason, live.reason);
}

TEST(BridgeServerTest, RejectsBusyPortAndBadPace) {
  LiveSession session(HumanObstacle(1.0));
  ServeOptions opt;
  opt.port = 0;
  BridgeServer first(session, opt);
  ASSERT_NE(first.port(), 0);
  ServeOptions same = opt;
  same.port = first.port();
  EXPECT_THROW(BridgeServer(session, same), Error);
  ServeOptions bad_pace = opt;
  bad_pace.pace = 0.0;
  EXPECT_THROW(BridgeServer(session, bad_pace), Error);
}

TEST(BridgeServerTest, ClientSteersObstacleOverWebsocket) {
  namespace beast = boost::beast;
  namespace websocket = beast::websocket;
  using tcp = boost::asio::ip::tcp;

  const Scenario sc = HumanObstacle(2.0);
  const std::size_t id = TeleopId(sc);
  LiveSession session(sc);
  ServeOptions opt;
  opt.port = 0;
  opt.pace = 20.0;
  opt.wait_for_clients = 1;
  BridgeServer server(session, opt);
  const unsigned short port = server.port();
  std::thread sim([&] { server.Run(); });

  boost::asio::io_context ioc;
  tcp::resolver resolver(ioc);
  websocket::stream<tcp::socket> ws(ioc);
  boost::asio::connect(ws.next_layer(),
                       resolver.resolve("127.0.0.1", std::to_string(port)));
  ws.handshake("127.0.0.1", "/");
  ws.write(boost::asio::buffer(Teleop(id, 0.0, -0.5)));
  ws.write(boost::asio::buffer(std::string("garbage")));

  std::vector<json> states;
  beast::error_code ec;
  for (;;) {
    beast::flat_buffer buffer;
    ws.read(buffer, ec);
    if (ec) break;
    states.push_back(json::parse(beast::buffers_to_string(buffer.data())));
  }
  sim.join();

  ASSERT_FALSE(states.empty());
  const json& last = states.back();
  EXPECT_EQ(last["type"], "state");
  EXPECT_EQ(last["flags"]["done"], true);
  EXPECT_EQ(last["flags"]["malformed_messages"], 1);
  EXPECT_LT(last["obstacles"][id]["pose"]["y"].get<double>(),
            sc.obstacles[id].position.y);
  ASSERT_EQ(session.command_log().size(), 1u);
  EXPECT_EQ(session.command_log()[0].velocity, (Vec2{0.0, -0.5}));
  EXPECT_EQ(server.accepted_clients(), 1u);
}

}  // namespace
}  // namespace safeguard
