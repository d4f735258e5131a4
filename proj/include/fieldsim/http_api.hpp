#pragma once

// HTTP/SSE front end for GatewayService.
//
//   GET  /state                               snapshot at the last processed tick
//   GET  /telemetry?from=&to=&kind=&node=&zone=   log slice (rows as in telemetry.csv)
//   POST /override   {"target": 401, "mode": "forced_on"}
//   POST /rules      {"water_on_below": 6}
//   POST /events     {"kind": "fire", "zone": 1, "duration": 60, "magnitude": 50}
//   GET  /stream                              text/event-stream of per-tick frames
//
// Errors are JSON: {"error": "...", "errors": [{"field": ..., "message": ...}]}.

#include <charconv>
#include <string>

#include "fieldsim/json_io.hpp"
#include "fieldsim/scenario.hpp"
#include "fieldsim/service.hpp"
#include "httplib.h"
#include "json.hpp"

namespace fieldsim {

inline ojson to_json(const Frame& f) {
  ojson readings = ojson::array(), commands = ojson::array(), alerts = ojson::array();
  for (const auto& r : f.records) {
    if (const auto* s = std::get_if<SensorReading>(&r.payload))
      readings.push_back(to_json(*s));
    else if (const auto* c = std::get_if<ActuatorCommand>(&r.payload))
      commands.push_back(to_json(*c));
    else if (const auto* a = std::get_if<Alert>(&r.payload))
      alerts.push_back(to_json(*a));
  }
  return {{"seq", f.seq},           {"tick", f.tick},     {"readings", readings},
          {"commands", commands},   {"alerts", alerts},   {"records", export_json(f.records)}};
}

namespace http_detail {

inline void send_json(httplib::Response& res, int status, const ojson& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& msg, const ValidationErrors& errs = {}) {
  ojson list = ojson::array();
  for (const auto& e : errs) list.push_back({{"field", e.field}, {"message", e.message}});
  send_json(res, status, {{"error", msg}, {"errors", list}});
}

inline bool parse_int(const std::string& s, std::int64_t& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

inline bool parse_body(const httplib::Request& req, httplib::Response& res, nlohmann::json& out) {
  out = nlohmann::json::parse(req.body, nullptr, false);
  if (out.is_discarded() || !out.is_object()) {
    send_error(res, 400, "body must be a JSON object");
    return false;
  }
  return true;
}

/// Runs `fn`, mapping library exceptions onto status codes.
template <class Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const ValidationFailure& e) {
    send_error(res, 422, "validation failed", e.errors());
  } catch (const NotFound& e) {
    send_error(res, 404, e.what());
  } catch (const NotRunning& e) {
    send_error(res, 409, e.what());
  } catch (const InvalidRange& e) {
    send_error(res, 400, e.what());
  }
}

inline std::string sse(std::string_view event, const std::string& data) {
  std::string out = "event: ";
  out += event;
  out += "\ndata: ";
  out += data;
  out += "\n\n";
  return out;
}

}  // namespace http_detail

/// Registers the API on `server`. `static_dir`, if non-empty, is served at /.
inline void mount_api(httplib::Server& server, GatewayService& service, const std::string& static_dir = {}) {
  using namespace http_detail;

  server.Get("/state", [&service](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, to_json(service.get_state())); });
  });

  server.Get("/telemetry", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      ValidationErrors errs;
      std::int64_t from = 0, to = std::numeric_limits<std::int64_t>::max();
      RecordFilter filter;
      if (req.has_param("from") && !parse_int(req.get_param_value("from"), from))
        errs.push_back({"from", "expected an integer"});
      if (req.has_param("to") && !parse_int(req.get_param_value("to"), to))
        errs.push_back({"to", "expected an integer"});
      if (req.has_param("kind")) {
        const auto k = req.get_param_value("kind");
        if (auto rk = parse_record_kind(k))
          filter.kind = *rk;
        else
          errs.push_back({"kind", "unknown record kind '" + k + "'"});
      }
      std::int64_t v = 0;
      if (req.has_param("node")) {
        if (parse_int(req.get_param_value("node"), v) && v >= 0)
          filter.node = NodeId{static_cast<std::uint64_t>(v)};
        else
          errs.push_back({"node", "expected a node id"});
      }
      if (req.has_param("zone")) {
        if (parse_int(req.get_param_value("zone"), v))
          filter.zone = static_cast<int>(v);
        else
          errs.push_back({"zone", "expected an integer"});
      }
      if (!errs.empty()) {
        send_error(res, 400, "bad query", errs);
        return;
      }
      send_json(res, 200, export_json(service.query(from, to, filter)));
    });
  });

  server.Post("/override", [&service](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    if (!parse_body(req, res, body)) return;
    guarded(res, [&] {
      ValidationErrors errs;
      NodeId target;
      OverrideMode mode = OverrideMode::Released;
      for (const auto& [key, _] : body.items())
        if (key != "target" && key != "mode") errs.push_back({key, "unknown key"});
      if (!body.contains("target") || !body["target"].is_number_unsigned())
        errs.push_back({"target", "expected an actuator id"});
      else
        target = NodeId{body["target"].get<std::uint64_t>()};
      const auto m = body.contains("mode") && body["mode"].is_string() ? parse_override_mode(body["mode"].get<std::string>())
                                                                       : std::nullopt;
      if (m)
        mode = *m;
      else
        errs.push_back({"mode", "expected forced_on, forced_off or released"});
      if (!errs.empty()) throw ValidationFailure(std::move(errs));
      service.post_override(target, mode);
      send_json(res, 202, {{"accepted", true}});
    });
  });

  server.Post("/rules", [&service](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    if (!parse_body(req, res, body)) return;
    guarded(res, [&] {
      ValidationErrors errs;
      RulePatch patch = parse_rule_patch(body, errs);
      if (!errs.empty()) throw ValidationFailure(std::move(errs));
      service.post_rule_patch(patch);
      send_json(res, 202, {{"accepted", true}});
    });
  });

  server.Post("/events", [&service](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    if (!parse_body(req, res, body)) return;
    guarded(res, [&] {
      ValidationErrors errs;
      EnvEvent e = parse_event(body, errs);
      if (!body.contains("kind")) errs.push_back({"event.kind", "required"});
      if (!errs.empty()) throw ValidationFailure(std::move(errs));
      service.post_event(e, !body.contains("start"));
      send_json(res, 202, {{"accepted", true}});
    });
  });

  server.Get("/stream", [&service](const httplib::Request&, httplib::Response& res) {
    std::shared_ptr<Subscription> sub;
    guarded(res, [&] { sub = service.subscribe(); });
    if (!sub) return;
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [sub](std::size_t, httplib::DataSink& sink) {
      auto write = [&](const std::string& s) { return sink.write(s.data(), s.size()); };
      while (sink.is_writable()) {
        auto poll = sub->next(std::chrono::milliseconds(500));
        switch (poll.status) {
          case Subscription::Status::Frame:
            if (!write(sse("frame", to_json(*poll.frame).dump()))) return false;
            break;
          case Subscription::Status::Timeout:
            if (!write(": keepalive\n\n")) return false;
            break;
          case Subscription::Status::Overflow:
            write(sse("overflow", R"({"reason":"client too slow; backfill via /telemetry"})"));
            sink.done();
            return true;
          case Subscription::Status::Ended:
            write(sse("end", "{}"));
            sink.done();
            return true;
        }
      }
      return false;
    });
  });

  if (!static_dir.empty()) server.set_mount_point("/", static_dir);
}

}  // namespace fieldsim
