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

#include "child/console_bridge.h"

#include <algorithm>
#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>

#include <sstream>

#include "child/transport.h"
#include "json.hpp"

namespace child {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

json QuaternionJson(const Quaternion& q) { return json::array({q.w, q.x, q.y, q.z}); }

std::string_view ContentType(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  return "application/octet-stream";
}

}  // namespace

// --- Messages ---------------------------------------------------------------

ConsoleStateMessage ConsoleStateMessage::FromSession(
    const SessionState& session, const FollowerState& follower,
    const CommandSet& commands, const TeleopPlan& plan) {
  ConsoleStateMessage m;
  m.time_ns = session.time_ns;
  m.phase = session.phase;
  m.arming_s = session.arming_s();
  m.sync_progress = session.sync_progress;
  m.left_leg_joystick = session.left_leg_joystick;
  m.right_leg_joystick = session.right_leg_joystick;
  m.left_arm_active = session.left_arm_active;
  m.right_arm_active = session.right_arm_active;
  for (std::int64_t ns : session.hold_ns) m.hold_s.push_back(ns / 1e9);
  m.follower_joints = follower.joints;
  m.follower_grippers = follower.grippers;
  m.base = follower.base;
  m.base_orientation = follower.base_orientation;
  m.velocity = commands.velocity;
  m.feedback_torques = commands.feedback_torques;
  m.tau_max = plan.leader.gains.tau_max;
  m.stale = commands.hold;
  return m;
}

std::string ConsoleStateMessage::ToJson() const {
  json j;
  j["type"] = "state";
  j["t_ns"] = time_ns;
  j["phase"] = ToString(phase);
  j["arming_s"] = arming_s;
  j["sync_progress"] = sync_progress;
  j["flags"] = {{"left_leg_joystick", left_leg_joystick},
                {"right_leg_joystick", right_leg_joystick},
                {"left_arm_active", left_arm_active},
                {"right_arm_active", right_arm_active}};
  j["hold_s"] = hold_s;
  j["follower"] = {{"joints", follower_joints},
                   {"grippers", follower_grippers},
                   {"base", {{"x", base.x}, {"y", base.y}, {"heading", base.heading}}},
                   {"orientation", QuaternionJson(base_orientation)}};
  j["velocity"] = {{"vx", velocity.vx}, {"vy", velocity.vy}, {"wz", velocity.wz}};
  j["feedback"] = {{"torques", feedback_torques}, {"tau_max", tau_max}};
  j["link"] = {{"stale", stale},
               {"age_ms", link_age_ms ? json(*link_age_ms) : json(nullptr)},
               {"received", frames_received},
               {"malformed", frames_malformed}};
  j["events"] = events;
  return j.dump();
}

ConsoleSchema ConsoleSchema::FromPlan(const TeleopPlan& plan) {
  ConsoleSchema s;
  s.leader = LeaderSchema::FromConfig(plan.leader);
  for (const JointSpec& joint : plan.follower_joints) {
    s.follower_joints.push_back(joint.name);
  }
  for (const LimbSpec* limb : plan.follower.GripperLimbs()) {
    s.follower_grippers.push_back(limb->name);
  }
  const SessionParams& params = plan.follower.session;
  s.activation_hold_s = params.activation_hold_s;
  s.toggle_hold_s = params.toggle_hold_s;
  s.close_threshold = params.close_threshold;
  s.release_threshold = params.release_threshold;
  return s;
}

std::string ConsoleSchema::ToJson() const {
  json joints = json::array();
  for (const JointSpec& joint : leader.joints) {
    joints.push_back({{"name", joint.name},
                      {"min", joint.position_min},
                      {"max", joint.position_max},
                      {"home", joint.home_position}});
  }
  json j;
  j["type"] = "schema";
  j["version"] = kConsoleProtocolVersion;
  j["leader"] = {{"joints", joints}, {"grippers", leader.grippers}};
  j["follower"] = {{"joints", follower_joints}, {"grippers", follower_grippers}};
  j["gestures"] = {{"activation_hold_s", activation_hold_s},
                   {"toggle_hold_s", toggle_hold_s},
                   {"close_threshold", close_threshold},
                   {"release_threshold", release_threshold}};
  j["state_rate_hz"] = state_rate_hz;
  return j.dump();
}

ConsoleLeaderInput ParseLeaderMessage(const std::string& text,
                                      const LeaderSchema& schema) {
  const json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error("console", "leader message is not a JSON object");
  }
  if (j.value("type", "") != "leader") {
    throw Error("console", "expected type \"leader\"");
  }
  auto numbers = [&](const char* key, std::size_t n) {
    std::vector<double> out;
    const auto it = j.find(key);
    if (it == j.end() || !it->is_array() || it->size() != n) {
      throw Error("console", std::string("'") + key + "' must be an array of " +
                                 std::to_string(n) + " numbers");
    }
    for (const json& v : *it) {
      if (!v.is_number() || !std::isfinite(v.get<double>())) {
        throw Error("console", std::string("'") + key + "' has a non-number");
      }
      out.push_back(v.get<double>());
    }
    return out;
  };
  ConsoleLeaderInput input;
  input.positions = numbers("positions", schema.joints.size());
  for (std::size_t i = 0; i < input.positions.size(); ++i) {
    input.positions[i] = schema.joints[i].Clamp(input.positions[i]);
  }
  input.triggers = numbers("triggers", schema.grippers.size());
  for (double& t : input.triggers) t = std::clamp(t, 0.0, 1.0);
  if (j.contains("orientation")) {
    const std::vector<double> q = numbers("orientation", 4);
    const double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    if (norm > 1e-9) {
      input.orientation = {q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm};
    }
  }
  return input;
}

// --- Server -----------------------------------------------------------------

struct ConsoleBridge::Impl {
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::shared_ptr<std::atomic<std::size_t>> clients;
  std::filesystem::path assets_dir;
  LeaderSchema leader_schema;
  std::string schema_json;
  std::chrono::nanoseconds state_period{33'333'333};

  mutable std::mutex mutex;
  std::shared_ptr<const std::string> state;  // guarded by mutex
  std::uint64_t state_version = 0;           // guarded by mutex
  std::optional<ConsoleLeaderInput> input;   // guarded by mutex

  void Accept();
};

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, ConsoleBridge::Impl& impl)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), impl_(impl),
        clients_(impl.clients) {
    clients_->fetch_add(1);
  }
  ~WsSession() { clients_->fetch_sub(1); }

  void Run(http::request<http::string_body> request) {
    ws_.set_option(websocket::stream_base::decorator(
        [](websocket::response_type& res) {
          res.set(http::field::server, "child-console-bridge");
        }));
    ws_.async_accept(request, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->Send(std::make_shared<const std::string>(self->impl_.schema_json));
      self->Read();
      self->Tick();
    });
  }

 private:
  void Read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec,
                                                        std::size_t) {
      if (ec) {
        self->timer_.cancel();
        return;
      }
      self->OnMessage(beast::buffers_to_string(self->buffer_.data()));
      self->buffer_.consume(self->buffer_.size());
      self->Read();
    });
  }

  void OnMessage(const std::string& text) {
    try {
      ConsoleLeaderInput input = ParseLeaderMessage(text, impl_.leader_schema);
      std::lock_guard lock(impl_.mutex);
      input.count = impl_.input ? impl_.input->count + 1 : 1;
      impl_.input = std::move(input);
    } catch (const Error& e) {
      json reply = {{"type", "error"}, {"message", e.what()}};
      Send(std::make_shared<const std::string>(reply.dump()));
    }
  }

  void Tick() {
    timer_.expires_after(impl_.state_period);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || !self->ws_.is_open()) return;
      std::shared_ptr<const std::string> state;
      {
        std::lock_guard lock(self->impl_.mutex);
        if (self->impl_.state_version != self->sent_version_) {
          state = self->impl_.state;
          self->sent_version_ = self->impl_.state_version;
        }
      }
      if (state) self->Send(std::move(state));
      self->Tick();
    });
  }

  void Send(std::shared_ptr<const std::string> text) {
    // A slow client gets the newest states, not a backlog.
    if (queue_.size() >= 4) queue_.pop_back();
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) Write();
  }

  void Write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->queue_.pop_front();
                      if (ec) {
                        self->queue_.clear();
                        return;
                      }
                      if (!self->queue_.empty()) self->Write();
                    });
  }

  websocket::stream<tcp::socket> ws_;
  asio::steady_timer timer_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  std::uint64_t sent_version_ = 0;
  ConsoleBridge::Impl& impl_;
  std::shared_ptr<std::atomic<std::size_t>> clients_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, ConsoleBridge::Impl& impl)
      : socket_(std::move(socket)), impl_(impl) {}

  void Run() {
    http::async_read(socket_, buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (!ec) self->OnRequest();
                     });
  }

 private:
  void OnRequest() {
    if (websocket::is_upgrade(request_)) {
      if (request_.target() != "/ws") {
        Respond(http::status::not_found, "text/plain", "websocket path is /ws\n");
        return;
      }
      std::make_shared<WsSession>(std::move(socket_), impl_)->Run(std::move(request_));
      return;
    }
    if (request_.method() != http::verb::get && request_.method() != http::verb::head) {
      Respond(http::status::bad_request, "text/plain", "GET only\n");
      return;
    }
    std::string target(request_.target());
    target = target.substr(0, target.find('?'));
    if (target.empty() || target.back() == '/') target += "index.html";
    const std::filesystem::path relative =
        std::filesystem::path(target).relative_path().lexically_normal();
    if (relative.empty() || *relative.begin() == "..") {
      Respond(http::status::forbidden, "text/plain", "forbidden\n");
      return;
    }
    const std::filesystem::path file = impl_.assets_dir / relative;
    std::ifstream in(file, std::ios::binary);
    if (impl_.assets_dir.empty() || !std::filesystem::is_regular_file(file) || !in) {
      Respond(http::status::not_found, "text/plain", "not found\n");
      return;
    }
    std::stringstream body;
    body << in.rdbuf();
    Respond(http::status::ok, ContentType(file), body.str());
  }

  void Respond(http::status status, std::string_view type, std::string body) {
    auto response = std::make_shared<http::response<http::string_body>>(
        status, request_.version());
    response->set(http::field::server, "child-console-bridge");
    response->set(http::field::content_type, std::string(type));
    response->keep_alive(false);
    if (request_.method() != http::verb::head) response->body() = std::move(body);
    response->prepare_payload();
    http::async_write(socket_, *response,
                      [self = shared_from_this(), response](beast::error_code,
                                                            std::size_t) {
                        beast::error_code ignored;
                        self->socket_.shutdown(tcp::socket::shutdown_send, ignored);
                      });
  }

  tcp::socket socket_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  ConsoleBridge::Impl& impl_;
};

}  // namespace

void ConsoleBridge::Impl::Accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<HttpSession>(std::move(socket), *this)->Run();
    Accept();
  });
}

ConsoleBridge::ConsoleBridge(Options options, ConsoleSchema schema)
    : options_(std::move(options)),
      schema_(std::move(schema)),
      clients_(std::make_shared<std::atomic<std::size_t>>(0)) {}

ConsoleBridge::~ConsoleBridge() { Stop(); }

void ConsoleBridge::Start() {
  if (impl_) return;
  auto impl = std::make_unique<Impl>();
  impl->clients = clients_;
  impl->assets_dir = options_.assets_dir;
  impl->leader_schema = schema_.leader;
  impl->schema_json = schema_.ToJson();
  impl->state_period = std::chrono::nanoseconds(
      static_cast<std::int64_t>(1e9 / schema_.state_rate_hz));
  try {
    const tcp::endpoint endpoint(asio::ip::make_address(options_.host),
                                 options_.port);
    impl->acceptor.open(endpoint.protocol());
    impl->acceptor.set_option(asio::socket_base::reuse_address(true));
    impl->acceptor.bind(endpoint);
    impl->acceptor.listen();
    port_ = impl->acceptor.local_endpoint().port();
  } catch (const boost::system::system_error& e) {
    throw NetworkError("console bridge cannot listen on " + options_.host + ":" +
                       std::to_string(options_.port) + ": " + e.what());
  }
  impl->Accept();
  impl_ = std::move(impl);
  thread_ = std::thread([impl = impl_.get()] { impl->io.run(); });
}

void ConsoleBridge::Stop() {
  if (!impl_) return;
  impl_->io.stop();
  if (thread_.joinable()) thread_.join();
  // Destroying the io_context releases every pending handler and with it
  // every session socket.
  impl_.reset();
}

void ConsoleBridge::PublishState(const ConsoleStateMessage& message) {
  if (!impl_) return;
  auto text = std::make_shared<const std::string>(message.ToJson());
  std::lock_guard lock(impl_->mutex);
  impl_->state = std::move(text);
  ++impl_->state_version;
}

std::optional<ConsoleLeaderInput> ConsoleBridge::LatestInput() const {
  if (!impl_) return std::nullopt;
  std::lock_guard lock(impl_->mutex);
  return impl_->input;
}

// --- Leader source ----------------------------------------------------------

ConsoleLeaderSource::ConsoleLeaderSource(const LeaderSchema& schema,
                                         const ConsoleBridge& bridge)
    : schema_(schema), bridge_(bridge) {}

StateFrame ConsoleLeaderSource::Sample(std::int64_t t_ns) {
  StateFrame frame;
  const std::optional<ConsoleLeaderInput> input = bridge_.LatestInput();
  std::vector<double> q;
  if (input) {
    q = input->positions;
    frame.gripper_triggers.assign(input->triggers.begin(), input->triggers.end());
    for (std::size_t i = 0; i < 4; ++i) {
      frame.orientation[i] = static_cast<float>(input->orientation[i]);
    }
  } else {
    for (const JointSpec& joint : schema_.joints) q.push_back(joint.home_position);
    frame.gripper_triggers.assign(schema_.grippers.size(), 0.0f);
  }
  std::lock_guard lock(mutex_);
  frame.joint_positions.assign(q.begin(), q.end());
  frame.joint_velocities.assign(q.size(), 0.0f);
  if (previous_t_ns_ && t_ns > *previous_t_ns_ && previous_.size() == q.size()) {
    const double dt = static_cast<double>(t_ns - *previous_t_ns_) / 1e9;
    for (std::size_t i = 0; i < q.size(); ++i) {
      frame.joint_velocities[i] = static_cast<float>((q[i] - previous_[i]) / dt);
    }
  }
  previous_ = std::move(q);
  previous_t_ns_ = t_ns;
  return frame;
}

}  // namespace child
