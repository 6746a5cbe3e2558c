#pragma once

// JSON-over-HTTP front end for SessionManager.
//
//   POST /sessions              create a session, returns round 1
//   POST /sessions/{id}/choice  {"choice": i} or {"auto": true}
//   GET  /sessions/{id}         read-only snapshot
//   GET  /healthz

#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "adaptfuse/session.hpp"

namespace adaptfuse {

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& msg, const std::string& field = {}) {
  nlohmann::json body{{"error", msg}, {"status", status}};
  if (!field.empty()) body["field"] = field;
  send_json(res, status, body);
}

template <class F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const SessionError& e) {
    send_error(res, e.status(), e.what(), e.field());
  } catch (const ConfigError& e) {
    send_error(res, 400, e.what(), e.field());
  } catch (const ContractViolation& e) {
    send_error(res, 400, e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

inline std::optional<nlohmann::json> parse_body(const httplib::Request& req, httplib::Response& res) {
  if (req.body.empty()) return nlohmann::json::object();
  auto j = nlohmann::json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    send_error(res, 400, "request body must be a JSON object");
    return std::nullopt;
  }
  return j;
}

}  // namespace detail

inline void register_routes(httplib::Server& srv, SessionManager& sessions, const std::string& cors_origin = "*") {
  srv.set_default_headers({{"Access-Control-Allow-Origin", cors_origin},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});

  srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Get("/healthz", [&sessions](const httplib::Request&, httplib::Response& res) {
    detail::send_json(res, 200, {{"status", "ok"}, {"sessions", sessions.size()}});
  });

  srv.Post("/sessions", [&sessions](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] {
      auto body = detail::parse_body(req, res);
      if (!body) return;
      detail::send_json(res, 201, sessions.create(*body));
    });
  });

  srv.Post(R"(/sessions/([0-9a-f]+)/choice)", [&sessions](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] {
      auto body = detail::parse_body(req, res);
      if (!body) return;
      detail::send_json(res, 200, sessions.submit(req.matches[1].str(), *body));
    });
  });

  srv.Get(R"(/sessions/([0-9a-f]+))", [&sessions](const httplib::Request& req, httplib::Response& res) {
    detail::guarded(res, [&] { detail::send_json(res, 200, sessions.state(req.matches[1].str())); });
  });

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) detail::send_error(res, res.status, "not found");
  });
}

}  // namespace adaptfuse
