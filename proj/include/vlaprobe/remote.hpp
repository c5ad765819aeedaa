#pragma once

// Remote models over protocol v1, the matching server side, and the
// conformance battery run against any endpoint.

#include <functional>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "vlaprobe/errors.hpp"
#include "vlaprobe/evaluator.hpp"
#include "vlaprobe/model.hpp"
#include "vlaprobe/scenario.hpp"
#include "vlaprobe/transport.hpp"

namespace vlaprobe {

class RemoteModel : public Model {
 public:
  explicit RemoteModel(std::shared_ptr<const Transport> transport)
      : transport_(std::move(transport)) {}

  ModelResponse infer(const ModelRequest& request) const override {
    check_request(request);
    return response_from_json(transport_->exchange(RemoteOp::Infer, to_json(request)));
  }
  std::string id() const override { return "remote:" + transport_->describe(); }
  const Transport& transport() const { return *transport_; }

 private:
  std::shared_ptr<const Transport> transport_;
};

inline ModelResponse remote_infer(const ModelRequest& request, const std::string& endpoint,
                                  int timeout_ms) {
  return RemoteModel(std::make_shared<HttpTransport>(endpoint, timeout_ms)).infer(request);
}

// ---------------------------------------------------------------------------
// Server side

// Decodes a request, runs the model, encodes the reply. Never throws.
inline nlohmann::json handle_infer(const Model& model, const nlohmann::json& request) {
  try {
    const ModelRequest req = request_from_json(request);
    nlohmann::json out = to_json(model.infer(req));
    if (conformance_requested(request)) out["echo"] = to_json(req);
    return out;
  } catch (const ProtocolError& e) {
    return error_json("bad_request", e.what());
  } catch (const std::exception& e) {
    return error_json("model_error", e.what());
  }
}

struct ServerHandlers {
  std::function<nlohmann::json(const nlohmann::json&)> infer;
  std::function<nlohmann::json(const nlohmann::json&)> evaluate;  // optional
};

inline ServerHandlers model_handlers(std::shared_ptr<const Model> model,
                                     std::shared_ptr<const Evaluator> evaluator = nullptr) {
  ServerHandlers h;
  h.infer = [model](const nlohmann::json& j) { return handle_infer(*model, j); };
  if (evaluator) {
    h.evaluate = [evaluator](const nlohmann::json& j) { return handle_evaluate(*evaluator, j); };
  }
  return h;
}

inline nlohmann::json dispatch_line(const ServerHandlers& h, std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded()) return error_json("bad_request", "malformed JSON");
  const bool evaluate =
      j.is_object() && j.contains("op") && j["op"].is_string() && j["op"] == "evaluate";
  if (evaluate) {
    if (!h.evaluate) return error_json("unsupported", "no evaluator configured");
    j.erase("op");
    return h.evaluate(j);
  }
  return h.infer(j);
}

// Line-delimited variant: one request per input line, one reply per line.
// Returns when the input stream ends.
inline void serve_stdio(const ServerHandlers& h, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out << dispatch_line(h, line).dump() << '\n';
    out.flush();
  }
}

// HTTP server on a background thread; binds on construction.
class ProtocolServer {
 public:
  ProtocolServer(ServerHandlers handlers, const std::string& host = "127.0.0.1", int port = 0)
      : handlers_(std::move(handlers)) {
    auto route = [this](const std::function<nlohmann::json(const nlohmann::json&)>& fn,
                        const httplib::Request& req, httplib::Response& res) {
      nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
      nlohmann::json reply = body.is_discarded() ? error_json("bad_request", "malformed JSON")
                                                 : fn(body);
      res.status = reply.contains("error") ? 400 : 200;
      res.set_content(reply.dump(), "application/json");
    };
    server_.Post("/v1/infer", [this, route](const httplib::Request& req, httplib::Response& res) {
      route(handlers_.infer, req, res);
    });
    server_.Post("/v1/evaluate",
                 [this, route](const httplib::Request& req, httplib::Response& res) {
                   if (!handlers_.evaluate) {
                     res.status = 404;
                     res.set_content(error_json("unsupported", "no evaluator").dump(),
                                     "application/json");
                     return;
                   }
                   route(handlers_.evaluate, req, res);
                 });
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw TransportError("cannot bind " + host + ":" + std::to_string(port));
    host_ = host;
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ProtocolServer(const ProtocolServer&) = delete;
  ProtocolServer& operator=(const ProtocolServer&) = delete;
  ~ProtocolServer() { stop(); }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }
  void wait() {
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  std::string endpoint() const { return "http://" + host_ + ":" + std::to_string(port_); }

 private:
  ServerHandlers handlers_;
  httplib::Server server_;
  std::string host_;
  int port_ = -1;
  std::thread thread_;
};

// ---------------------------------------------------------------------------
// Conformance battery

struct ConformanceCase {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ConformanceReport {
  std::vector<ConformanceCase> cases;
  bool all_passed() const {
    for (const auto& c : cases) {
      if (!c.passed) return false;
    }
    return !cases.empty();
  }
};

// Runs the fixed battery against `transport` using `scene` for scene_ref
// and ego state. Protocol violations fail the case; transport failures and
// timeouts propagate.
inline ConformanceReport conformance_check(const Transport& transport, const Scenario& scene) {
  ConformanceReport report;
  ModelRequest base;
  base.scene_ref = {scene.id, 0.0};
  base.ego_state = scene.ego_init;
  base.instruction = scene.clean_text;

  auto run = [&](const std::string& name, ModelRequest req, auto&& check) {
    ConformanceCase c{name, false, {}};
    try {
      const nlohmann::json raw = transport.exchange(RemoteOp::Infer, to_json(req, true));
      const ModelResponse resp = response_from_json(raw);
      c.detail = check(req, raw, resp);
      c.passed = c.detail.empty();
      if (c.passed) c.detail = "ok";
    } catch (const ProtocolError& e) {
      c.detail = e.what();
    } catch (const DomainError& e) {
      c.detail = e.what();
    }
    report.cases.push_back(std::move(c));
  };
  auto echo_of = [](const nlohmann::json& raw) -> const nlohmann::json* {
    const auto it = raw.find("echo");
    return it != raw.end() && it->is_object() ? &*it : nullptr;
  };

  run("clean", base, [&](const ModelRequest& req, const nlohmann::json& raw, const ModelResponse&) {
    const auto* echo = echo_of(raw);
    if (!echo) return std::string("response carries no echo of the request");
    if (!echo->contains("instruction") || (*echo)["instruction"] != req.instruction) {
      return std::string("echoed instruction differs from the request");
    }
    if (!echo->contains("scene_ref") || (*echo)["scene_ref"] != to_json(req)["scene_ref"]) {
      return std::string("echoed scene_ref differs from the request");
    }
    return std::string();
  });

  ModelRequest noise = base;
  noise.instruction = "qzxv jkwp vvbq";
  noise.nav.reset();
  run("empty_reasoning", noise, [](const ModelRequest&, const nlohmann::json&,
                                   const ModelResponse& resp) {
    const bool empty = resp.reasoning.full_text.empty();
    if (empty && !resp.model_token_count && resp.reasoning.token_count != 0) {
      return std::string("empty reasoning must report token_count 0");
    }
    if (empty && !resp.reasoning.object.empty()) {
      return std::string("empty reasoning with non-empty fields");
    }
    return std::string();
  });

  run("multi_mode", base, [](const ModelRequest&, const nlohmann::json&,
                             const ModelResponse& resp) {
    if (resp.trajectory.modes.empty()) return std::string("no trajectory modes");
    const auto v = trajectory_set_violations(resp.trajectory);
    return v.empty() ? std::string() : v.front();
  });

  ModelRequest with_nav = base;
  with_nav.nav = "turn left";
  run("nav_present", with_nav,
      [&](const ModelRequest& req, const nlohmann::json& raw, const ModelResponse&) {
        const auto* echo = echo_of(raw);
        if (!echo) return std::string("response carries no echo of the request");
        if (!echo->contains("nav") || (*echo)["nav"] != *req.nav) {
          return std::string("nav field was not received");
        }
        return std::string();
      });

  ModelRequest without_nav = base;
  without_nav.nav.reset();
  run("nav_absent", without_nav,
      [&](const ModelRequest&, const nlohmann::json& raw, const ModelResponse&) {
        const auto* echo = echo_of(raw);
        if (!echo) return std::string("response carries no echo of the request");
        if (echo->contains("nav") && !(*echo)["nav"].is_null()) {
          return std::string("nav reported although none was sent");
        }
        return std::string();
      });
  return report;
}

}  // namespace vlaprobe
