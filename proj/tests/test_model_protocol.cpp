#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include "fixtures.hpp"
#include "vlaprobe/vlaprobe.hpp"

using namespace vlaprobe;
using nlohmann::json;

namespace {

ModelRequest sample_request() {
  ModelRequest r;
  r.scene_ref = {"straight", 1.5};
  r.ego_state = {{1.0, -2.0, 0.25}, 9.5};
  r.instruction = "slow down for the lead car ahead";
  r.nav = "turn left";
  r.frames = {"cam/front_000.jpg"};
  return r;
}

ModelResponse sample_response() {
  ModelResponse r;
  r.reasoning = decompose("Slow down to keep distance to the lead vehicle", default_ontology());
  r.trajectory.modes = {{{0.5, 1, 0}, {1.0, 2, 0}}, {{0.5, 0.8, 0}, {1.0, 1.6, 0}}};
  return r;
}

std::shared_ptr<MockModel> straight_mock() {
  return std::make_shared<MockModel>(std::vector<Scenario>{fixture::straight()});
}

template <typename Fn>
ServerHandlers tampering_handlers(Fn&& tamper) {
  auto mock = straight_mock();
  ServerHandlers h;
  h.infer = [mock, tamper](const json& j) {
    json out = handle_infer(*mock, j);
    tamper(out);
    return out;
  };
  return h;
}

const ConformanceCase& find_case(const ConformanceReport& r, const std::string& name) {
  for (const auto& c : r.cases) {
    if (c.name == name) return c;
  }
  throw std::runtime_error("no case " + name);
}

}  // namespace

TEST(Codec, RequestRoundTrip) {
  const ModelRequest r = sample_request();
  EXPECT_EQ(request_from_json(to_json(r)), r);
  ModelRequest no_nav = r;
  no_nav.nav.reset();
  no_nav.frames.clear();
  const json j = to_json(no_nav);
  EXPECT_FALSE(j.contains("nav"));
  EXPECT_FALSE(j.contains("frames"));
  EXPECT_EQ(request_from_json(j), no_nav);
  EXPECT_TRUE(conformance_requested(to_json(r, true)));
  EXPECT_FALSE(conformance_requested(j));
}

TEST(Codec, RequestErrorsNameField) {
  auto field_of = [](const json& j) {
    try {
      request_from_json(j);
    } catch (const ProtocolError& e) {
      return e.field();
    }
    return std::string("none");
  };
  json j = to_json(sample_request());
  j["version"] = 2;
  EXPECT_EQ(field_of(j), "version");
  j = to_json(sample_request());
  j["ego_state"].erase("speed");
  EXPECT_EQ(field_of(j), "ego_state.speed");
  j = to_json(sample_request());
  j["instruction"] = "  ";
  EXPECT_EQ(field_of(j), "instruction");
  j = to_json(sample_request());
  j["scene_ref"]["t"] = -1.0;
  EXPECT_EQ(field_of(j), "scene_ref.t");
  j = to_json(sample_request());
  j["nav"] = 3;
  EXPECT_EQ(field_of(j), "nav");
}

TEST(Codec, ResponseRoundTrip) {
  const ModelResponse r = sample_response();
  EXPECT_EQ(response_from_json(to_json(r)), r);
  ModelResponse with_count = r;
  with_count.model_token_count = 77;
  const auto back = response_from_json(to_json(with_count));
  EXPECT_EQ(back.reasoning.token_count, 77u);
  EXPECT_EQ(back.model_token_count, 77u);
}

TEST(Codec, ResponseValidation) {
  json j = to_json(sample_response());
  j["reasoning"]["token_count"] = 3;
  EXPECT_THROW(response_from_json(j), ProtocolError);
  j = to_json(sample_response());
  j["trajectory"]["modes"][0][1]["t"] = 0.25;  // not increasing
  EXPECT_THROW(response_from_json(j), ProtocolError);
  j = to_json(sample_response());
  j["trajectory"]["modes"] = json::array();
  EXPECT_THROW(response_from_json(j), ProtocolError);
  j["degenerate"] = true;
  EXPECT_NO_THROW(response_from_json(j));
  try {
    response_from_json(error_json("model_error", "boom"));
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.field(), "error");
    EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
  }
  ModelResponse empty;
  empty.trajectory = sample_response().trajectory;
  EXPECT_EQ(response_from_json(to_json(empty)).reasoning.token_count, 0u);
}

TEST(Server, HandleInferEchoAndErrors) {
  auto mock = straight_mock();
  const json ok = handle_infer(*mock, to_json(sample_request(), true));
  ASSERT_TRUE(ok.contains("echo"));
  EXPECT_EQ(ok["echo"]["nav"], "turn left");
  EXPECT_FALSE(handle_infer(*mock, to_json(sample_request())).contains("echo"));
  EXPECT_EQ(handle_infer(*mock, json{{"version", 1}})["error"]["code"], "bad_request");
  ModelRequest other = sample_request();
  other.scene_ref.scenario_id = "elsewhere";
  EXPECT_EQ(handle_infer(*mock, to_json(other))["error"]["code"], "model_error");
  EXPECT_EQ(dispatch_line(model_handlers(mock), "{oops")["error"]["code"], "bad_request");
  EXPECT_EQ(dispatch_line(model_handlers(mock), R"({"op":"evaluate"})")["error"]["code"],
            "unsupported");
}

TEST(Server, StdioLoopOneReplyPerLine) {
  auto mock = straight_mock();
  std::istringstream in(to_json(sample_request()).dump() + "\n\n" + "{bad\n");
  std::ostringstream out;
  serve_stdio(model_handlers(mock), in, out);
  std::istringstream lines(out.str());
  std::string a, b, c;
  ASSERT_TRUE(std::getline(lines, a));
  ASSERT_TRUE(std::getline(lines, b));
  EXPECT_FALSE(std::getline(lines, c));
  EXPECT_NO_THROW(response_from_json(json::parse(a)));
  EXPECT_TRUE(json::parse(b).contains("error"));
}

TEST(Http, RemoteModelMatchesLocal) {
  auto mock = straight_mock();
  ProtocolServer server(model_handlers(mock, std::make_shared<BuiltinEvaluator>()));
  const ModelRequest req = sample_request();
  const auto remote = remote_infer(req, server.endpoint(), 5000);
  EXPECT_EQ(remote, mock->infer(req));
  RemoteModel rm(std::make_shared<HttpTransport>(server.endpoint() + "/", 5000));
  EXPECT_EQ(rm.infer(req), remote);
  EXPECT_EQ(rm.id(), "remote:" + server.endpoint());
}

TEST(Http, ServerErrorBecomesProtocolError) {
  auto mock = straight_mock();
  ProtocolServer server(model_handlers(mock));
  ModelRequest req = sample_request();
  req.scene_ref.scenario_id = "elsewhere";
  EXPECT_THROW(remote_infer(req, server.endpoint(), 5000), ProtocolError);
}

TEST(Http, UnreachableAndTimeout) {
  int port = 0;
  {
    ProtocolServer probe(model_handlers(straight_mock()));
    port = probe.port();
  }
  EXPECT_THROW(remote_infer(sample_request(), "http://127.0.0.1:" + std::to_string(port), 1000),
               TransportError);
  ServerHandlers slow;
  slow.infer = [](const json&) {
    std::this_thread::sleep_for(std::chrono::milliseconds(800));
    return json::object();
  };
  ProtocolServer server(slow);
  EXPECT_THROW(remote_infer(sample_request(), server.endpoint(), 200), TimeoutError);
  EXPECT_THROW(HttpTransport("http://127.0.0.1:1", 0), DomainError);
}

TEST(Conformance, MockServerPassesEverything) {
  ProtocolServer server(model_handlers(straight_mock()));
  HttpTransport t(server.endpoint(), 5000);
  const auto report = conformance_check(t, fixture::straight());
  EXPECT_EQ(report.cases.size(), 5u);
  for (const auto& c : report.cases) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
  EXPECT_TRUE(report.all_passed());
}

TEST(Conformance, DroppedNavFails) {
  ProtocolServer server(tampering_handlers([](json& out) {
    if (out.contains("echo")) out["echo"].erase("nav");
  }));
  HttpTransport t(server.endpoint(), 5000);
  const auto report = conformance_check(t, fixture::straight());
  EXPECT_FALSE(report.all_passed());
  EXPECT_FALSE(find_case(report, "nav_present").passed);
  EXPECT_TRUE(find_case(report, "nav_absent").passed);
  EXPECT_TRUE(find_case(report, "clean").passed);
}

TEST(Conformance, UnsortedTimesFail) {
  ProtocolServer server(tampering_handlers([](json& out) {
    if (!out.contains("trajectory")) return;
    auto& mode = out["trajectory"]["modes"][0];
    std::swap(mode[0], mode[1]);
  }));
  HttpTransport t(server.endpoint(), 5000);
  const auto report = conformance_check(t, fixture::straight());
  EXPECT_FALSE(find_case(report, "multi_mode").passed);
  EXPECT_NE(find_case(report, "multi_mode").detail.find("trajectory"), std::string::npos);
}

TEST(Conformance, MissingEchoFails) {
  ProtocolServer server(tampering_handlers([](json& out) { out.erase("echo"); }));
  HttpTransport t(server.endpoint(), 5000);
  const auto report = conformance_check(t, fixture::straight());
  EXPECT_FALSE(find_case(report, "clean").passed);
  EXPECT_TRUE(find_case(report, "empty_reasoning").passed);
}

TEST(Stdio, CliServerPassesConformance) {
  const auto dir = fixture::temp_dir("stdio");
  save_scenario(fixture::straight(), dir / "straight.json");
  auto t = std::make_shared<StdioTransport>(
      std::vector<std::string>{VLAPROBE_CLI, "serve", "--stdio", "--scenarios",
                               (dir / "straight.json").string()},
      10000);
  const auto report = conformance_check(*t, fixture::straight());
  for (const auto& c : report.cases) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
  RemoteModel rm(t);
  EXPECT_EQ(rm.infer(sample_request()), straight_mock()->infer(sample_request()));
  ExternalEvaluator ev(t);
  const auto a = decompose("Stop because a pedestrian is crossing", default_ontology());
  const auto b = decompose("Slow down to keep distance to the lead vehicle", default_ontology());
  EXPECT_EQ(ev.evaluate(a, b).fields, BuiltinEvaluator().evaluate(a, b).fields);
  EXPECT_TRUE(ev.evaluate(a, b).external);
}

TEST(Stdio, TimeoutAndExit) {
  StdioTransport sleeper({"sleep", "5"}, 200);
  EXPECT_THROW(sleeper.exchange(RemoteOp::Infer, to_json(sample_request())), TimeoutError);
  EXPECT_THROW(sleeper.exchange(RemoteOp::Infer, to_json(sample_request())), TransportError);
  StdioTransport quitter({"true"}, 2000);
  EXPECT_THROW(quitter.exchange(RemoteOp::Infer, to_json(sample_request())), TransportError);
  EXPECT_THROW(StdioTransport({}, 100), DomainError);
}

TEST(ExternalEvaluatorHttp, EchoAndRangeError) {
  auto mock = straight_mock();
  ProtocolServer good(model_handlers(mock, std::make_shared<BuiltinEvaluator>()));
  ExternalEvaluator ev(std::make_shared<HttpTransport>(good.endpoint(), 5000));
  const auto a = decompose("Stop because a pedestrian is crossing", default_ontology());
  const auto b = decompose("Slow down to keep distance to the lead vehicle", default_ontology());
  const auto v = ev.evaluate(a, b);
  EXPECT_EQ(v.fields, BuiltinEvaluator().evaluate(a, b).fields);
  EXPECT_EQ(v.overall, BuiltinEvaluator().evaluate(a, b).overall);

  ServerHandlers bad;
  bad.infer = [](const json&) { return json::object(); };
  bad.evaluate = [](const json&) {
    return json{{"version", 1},
                {"verdict",
                 {{"object", 0.1}, {"relation", 1.7}, {"implication", 0}, {"planning", 0}, {"overall", 0.4}}}};
  };
  ProtocolServer broken(bad);
  ExternalEvaluator ev2(std::make_shared<HttpTransport>(broken.endpoint(), 5000));
  try {
    ev2.evaluate(a, b);
    FAIL() << "expected ProtocolError";
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.field(), "relation");
  }
  ProtocolServer none(model_handlers(mock));
  ExternalEvaluator ev3(std::make_shared<HttpTransport>(none.endpoint(), 5000));
  EXPECT_THROW(ev3.evaluate(a, b), TransportError);
}
