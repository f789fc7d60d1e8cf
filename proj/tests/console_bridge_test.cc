// Copyright 2026 The CHILD Teleop Authors
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

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <thread>

#include "child/console_bridge.h"
#include "child/runtime.h"
#include "json.hpp"
#include "test_support.h"

namespace child {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using json = nlohmann::json;
using ::testing::HasSubstr;
using namespace std::chrono_literals;

class WsClient {
 public:
  explicit WsClient(std::uint16_t port) : ws_(io_) {
    tcp::resolver resolver(io_);
    asio::connect(beast::get_lowest_layer(ws_), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1:" + std::to_string(port), "/ws");
  }
  ~WsClient() {
    beast::error_code ec;
    ws_.close(websocket::close_code::normal, ec);
  }
  json Read() {
    beast::flat_buffer buffer;
    ws_.read(buffer);
    return json::parse(beast::buffers_to_string(buffer.data()));
  }
  // Next message of the given type.
  json ReadType(const std::string& type) {
    for (;;) {
      json j = Read();
      if (j["type"] == type) return j;
    }
  }
  void Send(const json& j) { ws_.write(asio::buffer(j.dump())); }

 private:
  asio::io_context io_;
  websocket::stream<tcp::socket> ws_;
};

http::response<http::string_body> Get(std::uint16_t port, const std::string& target) {
  asio::io_context io;
  beast::tcp_stream stream(io);
  tcp::resolver resolver(io);
  stream.connect(resolver.resolve("127.0.0.1", std::to_string(port)));
  http::request<http::empty_body> req(http::verb::get, target, 11);
  req.set(http::field::host, "127.0.0.1");
  http::write(stream, req);
  beast::flat_buffer buffer;
  http::response<http::string_body> res;
  http::read(stream, buffer, res);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return res;
}

json LeaderMessage(const ConsoleSchema& schema, double left, double right,
                   std::vector<double> positions = {}) {
  if (positions.empty()) {
    for (const JointSpec& j : schema.leader.joints) positions.push_back(j.home_position);
  }
  return {{"type", "leader"},
          {"positions", positions},
          {"triggers", {left, right}},
          {"orientation", {1.0, 0.0, 0.0, 0.0}}};
}

class ConsoleBridgeTest : public ::testing::Test {
 protected:
  void SetUp() override {
    bridge_ = std::make_unique<ConsoleBridge>(
        ConsoleBridge::Options{"127.0.0.1", 0, testing::SourcePath("assets/console")}, schema_);
    bridge_->Start();
    ASSERT_NE(bridge_->port(), 0);
  }
  void TearDown() override { bridge_->Stop(); }

  bool WaitClients(std::size_t n) {
    for (int i = 0; i < 200; ++i) {
      if (bridge_->client_count() == n) return true;
      std::this_thread::sleep_for(5ms);
    }
    return false;
  }

  TeleopPlan plan_ = testing::G1Plan();
  ConsoleSchema schema_ = ConsoleSchema::FromPlan(plan_);
  std::unique_ptr<ConsoleBridge> bridge_;
};

TEST_F(ConsoleBridgeTest, ClientReceivesSchemaFirst) {
  WsClient client(bridge_->port());
  const json schema = client.Read();
  EXPECT_EQ(schema["type"], "schema");
  EXPECT_EQ(schema["version"], kConsoleProtocolVersion);
  EXPECT_EQ(schema["leader"]["joints"].size(), 22u);
  EXPECT_EQ(schema["leader"]["joints"][0]["name"], plan_.leader_joints[0].name);
  EXPECT_EQ(schema["leader"]["grippers"].size(), 2u);
  EXPECT_EQ(schema["follower"]["joints"].size(), 29u);
  EXPECT_EQ(schema["gestures"]["activation_hold_s"], 3.0);
  EXPECT_EQ(schema["gestures"]["toggle_hold_s"], 1.0);
  EXPECT_EQ(schema["state_rate_hz"], 30.0);
  EXPECT_TRUE(WaitClients(1));
}

TEST_F(ConsoleBridgeTest, LeaderInputIsClampedAndNormalized) {
  WsClient client(bridge_->port());
  client.Read();
  std::vector<double> positions(22, 0.0);
  positions[0] = 100.0;
  json msg = LeaderMessage(schema_, 1.7, -0.5, positions);
  msg["orientation"] = {2.0, 0.0, 0.0, 0.0};
  client.Send(msg);
  std::optional<ConsoleLeaderInput> input;
  for (int i = 0; i < 200 && !input; ++i) {
    std::this_thread::sleep_for(5ms);
    input = bridge_->LatestInput();
  }
  ASSERT_TRUE(input.has_value());
  EXPECT_EQ(input->positions[0], plan_.leader_joints[0].position_max);
  EXPECT_EQ(input->triggers, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(input->orientation[0], 1.0);
  EXPECT_EQ(input->count, 1u);
}

TEST_F(ConsoleBridgeTest, BadInputGetsAnErrorReply) {
  WsClient client(bridge_->port());
  client.Read();
  client.Send({{"type", "leader"}, {"positions", {1, 2}}, {"triggers", {0, 0}}});
  const json reply = client.ReadType("error");
  EXPECT_THAT(reply["message"].get<std::string>(), HasSubstr("positions"));
  EXPECT_FALSE(bridge_->LatestInput().has_value());
}

TEST_F(ConsoleBridgeTest, StateArrivesAtAboutThirtyHertz) {
  WsClient client(bridge_->port());
  client.Read();
  std::atomic<bool> stop{false};
  std::thread publisher([&] {
    SessionState session = InitialSessionState(plan_);
    const FollowerState follower = InitialFollowerState(plan_.follower);
    CommandSet commands;
    for (int k = 0; !stop; ++k) {
      session.time_ns = k * 5'000'000;
      bridge_->PublishState(ConsoleStateMessage::FromSession(session, follower, commands, plan_));
      std::this_thread::sleep_for(5ms);
    }
  });
  client.ReadType("state");
  const auto start = std::chrono::steady_clock::now();
  int n = 0;
  json last;
  while (std::chrono::steady_clock::now() - start < 1s) {
    last = client.ReadType("state");
    ++n;
  }
  stop = true;
  publisher.join();
  EXPECT_GE(n, 24);
  EXPECT_LE(n, 34);
  EXPECT_EQ(last["phase"], "Idle");
  EXPECT_EQ(last["follower"]["joints"].size(), 29u);
  EXPECT_TRUE(last["link"]["age_ms"].is_null());
}

TEST_F(ConsoleBridgeTest, StaticAssetsAreServed) {
  const auto index = Get(bridge_->port(), "/");
  EXPECT_EQ(index.result(), http::status::ok);
  EXPECT_THAT(index.body(), HasSubstr("/ws"));
  EXPECT_THAT(std::string(index[http::field::content_type]), HasSubstr("text/html"));
  EXPECT_EQ(Get(bridge_->port(), "/index.html?x=1").result(), http::status::ok);
  EXPECT_EQ(Get(bridge_->port(), "/missing.js").result(), http::status::not_found);
  EXPECT_EQ(Get(bridge_->port(), "/../CMakeLists.txt").result(), http::status::forbidden);
  EXPECT_EQ(Get(bridge_->port(), "/a/../../x").result(), http::status::forbidden);
}

TEST(ConsoleMessageTest, ParseLeaderMessageRejectsWrongShapes) {
  const LeaderSchema schema = LeaderSchema::FromConfig(testing::LoadFixture("g1_leader.yaml"));
  EXPECT_THROW(ParseLeaderMessage("not json", schema), Error);
  EXPECT_THROW(ParseLeaderMessage("[]", schema), Error);
  EXPECT_THROW(ParseLeaderMessage(R"({"type":"state"})", schema), Error);
  json ok = {{"type", "leader"},
             {"positions", std::vector<double>(22, 0.0)},
             {"triggers", {0.5, 0.5}}};
  EXPECT_NO_THROW(ParseLeaderMessage(ok.dump(), schema));
  json nan = ok;
  nan["triggers"] = {"a", 0.0};
  EXPECT_THROW(ParseLeaderMessage(nan.dump(), schema), Error);
  json zero = ok;
  zero["orientation"] = {0, 0, 0, 0};
  EXPECT_EQ(ParseLeaderMessage(zero.dump(), schema).orientation,
            (std::array<double, 4>{1, 0, 0, 0}));
}

TEST(ConsoleMessageTest, StateJsonCarriesTheSessionFields) {
  const TeleopPlan plan = testing::G1Plan();
  SessionState s = InitialSessionState(plan);
  s.phase = Phase::kActive;
  s.left_leg_joystick = true;
  s.left_arm_active = false;
  FollowerState f = InitialFollowerState(plan.follower);
  f.base = {0.5, -0.25, 1.0};
  CommandSet c;
  c.velocity = {0.3, 0.0, 0.1, 0};
  c.feedback_torques.assign(22, 0.2);
  ConsoleStateMessage m = ConsoleStateMessage::FromSession(s, f, c, plan);
  m.link_age_ms = 4.5;
  m.events = {"6000000000 JoystickEngaged left"};
  const json j = json::parse(m.ToJson());
  EXPECT_EQ(j["type"], "state");
  EXPECT_EQ(j["phase"], "Active");
  EXPECT_EQ(j["flags"]["left_leg_joystick"], true);
  EXPECT_EQ(j["flags"]["left_arm_active"], false);
  EXPECT_EQ(j["follower"]["base"]["x"], 0.5);
  EXPECT_EQ(j["velocity"]["vx"], 0.3);
  EXPECT_EQ(j["feedback"]["torques"].size(), 22u);
  EXPECT_EQ(j["feedback"]["tau_max"], plan.leader.gains.tau_max);
  EXPECT_EQ(j["link"]["age_ms"], 4.5);
  EXPECT_EQ(j["events"][0], "6000000000 JoystickEngaged left");
}

TEST(ConsoleBridgeStartTest, TakenPortIsANetworkError) {
  const TeleopPlan plan = testing::G1Plan();
  ConsoleBridge first({"127.0.0.1", 0, {}}, ConsoleSchema::FromPlan(plan));
  first.Start();
  ConsoleBridge second({"127.0.0.1", first.port(), {}}, ConsoleSchema::FromPlan(plan));
  EXPECT_THROW(second.Start(), NetworkError);
  first.Stop();
}

// Drives a whole session from a console client: activation, joystick
// engagement on the left leg, and forward walking.
TEST(ConsoleLoopTest, ConsoleDrivesTheFullSession) {
  RunManifest m;
  m.leader_path = testing::SourcePath("configs/g1_leader.yaml").string();
  m.follower_path = testing::SourcePath("configs/g1_follower_loco.yaml").string();
  m.state_endpoint = {"127.0.0.1", 0};
  m.source = SourceMode::kConsole;
  m.console = true;
  m.console_port = 0;
  m.assets_dir = testing::SourcePath("assets/console");
  Runtime runtime(m);
  runtime.Start();
  const ConsoleSchema schema = ConsoleSchema::FromPlan(testing::G1Plan());
  WsClient client(runtime.console_port());
  ASSERT_EQ(client.Read()["type"], "schema");

  // Sends `msg` at the console state rate for `seconds`, returning the last state.
  auto drive = [&](const json& msg, double seconds) {
    json state;
    const auto end = std::chrono::steady_clock::now() +
                     std::chrono::duration<double>(seconds);
    while (std::chrono::steady_clock::now() < end) {
      client.Send(msg);
      state = client.ReadType("state");
    }
    return state;
  };
  json state = drive(LeaderMessage(schema, 0, 0), 0.3);
  EXPECT_EQ(state["phase"], "Idle");
  state = drive(LeaderMessage(schema, 1, 1), 3.4);
  EXPECT_TRUE(state["phase"] == "Synchronizing" || state["phase"] == "Active") << state["phase"];
  state = drive(LeaderMessage(schema, 0, 0), 0.5);
  EXPECT_EQ(state["phase"], "Active");
  state = drive(LeaderMessage(schema, 1, 0), 1.4);
  EXPECT_EQ(state["flags"]["left_leg_joystick"], true);
  EXPECT_EQ(state["flags"]["left_arm_active"], false);

  std::vector<double> lean;
  for (const JointSpec& j : schema.leader.joints) lean.push_back(j.home_position);
  const TeleopPlan plan = testing::G1Plan();
  lean[(*plan.side(Side::kLeft).hip)[1]] += 0.3;
  const double x0 = runtime.status().base.x;
  state = drive(LeaderMessage(schema, 0, 0, lean), 1.0);
  EXPECT_GT(state["velocity"]["vx"].get<double>(), 0.0);
  EXPECT_GT(runtime.status().base.x, x0 + 0.05);
  bool engaged_logged = false;
  for (const auto& e : state["events"]) {
    engaged_logged |= e.get<std::string>().find("JoystickEngaged left") != std::string::npos;
  }
  EXPECT_TRUE(engaged_logged);
  runtime.Stop();
}

}  // namespace
}  // namespace child
