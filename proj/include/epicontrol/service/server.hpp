// Copyright 2026 The Epicontrol Authors
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

#ifndef EPICONTROL_SERVICE_SERVER_HPP
#define EPICONTROL_SERVICE_SERVER_HPP

#include <functional>
#include <string>

// Before httplib: <resolv.h> defines a `_res` macro that breaks Eigen.
#include "epicontrol/errors.hpp"
#include "epicontrol/service/session.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace epicontrol {

namespace detail {

inline void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, status, json{{"code", code}, {"message", message}});
}

/// Runs `fn`, mapping library errors to JSON error bodies.
inline void guarded(httplib::Response& res, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const NotFound& e) {
    send_error(res, 404, "not_found", e.what());
  } catch (const WrongStatus& e) {
    send_error(res, 409, "wrong_status", e.what());
  } catch (const ConfigError& e) {
    send_error(res, 400, "invalid_config", e.what());
  } catch (const InvalidAction& e) {
    send_error(res, 400, "invalid_action", e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, "bad_request", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

inline json parse_body(const httplib::Request& req) {
  if (req.body.empty()) {
    return json::object();
  }
  return json::parse(req.body);
}

}  // namespace detail

/// Mounts the session API on `server`.
inline void register_routes(httplib::Server& server, SessionManager& sessions) {
  using detail::guarded;
  using detail::send_json;

  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, json{{"status", "ok"}});
  });

  server.Post("/sessions", [&sessions](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 201, sessions.create(detail::parse_body(req))); });
  });

  server.Get(R"(/sessions/([0-9a-zA-Z_-]+))", [&sessions](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, sessions.state(req.matches[1])); });
  });

  server.Post(R"(/sessions/([0-9a-zA-Z_-]+)/step)", [&sessions](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto choice = parse_step_choice(detail::parse_body(req));
      send_json(res, 200, sessions.step(req.matches[1], choice));
    });
  });

  server.Get(R"(/sessions/([0-9a-zA-Z_-]+)/whatif)", [&sessions](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, json(sessions.whatif(req.matches[1]))); });
  });

  server.Get(R"(/sessions/([0-9a-zA-Z_-]+)/qtable)", [&sessions](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, sessions.qtable(req.matches[1])); });
  });
}

}  // namespace epicontrol

#endif
