#pragma once

// Semantic evaluator boundary. Attack code consumes only EvaluatorVerdict,
// so the builtin field scorer can be swapped for an external service.
//
// External wire format (v1, endpoint /v1/evaluate or "op":"evaluate"):
//   request  {"version":1, "perturbed":{reasoning}, "benign":{reasoning}}
//   response {"version":1, "verdict":{"object":s,"relation":s,"implication":s,
//             "planning":s,"overall":s}}   with every s in [0, 1]

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>

#include <json.hpp>

#include "vlaprobe/errors.hpp"
#include "vlaprobe/model.hpp"
#include "vlaprobe/reasoning_eval.hpp"
#include "vlaprobe/transport.hpp"

namespace vlaprobe {

struct EvaluatorVerdict {
  std::array<double, 4> fields{};  // object, relation, implication, planning
  double overall = 0.0;
  bool external = false;

  double score(SemanticScope scope) const {
    return scope == SemanticScope::All ? overall : fields[static_cast<std::size_t>(scope)];
  }
  friend bool operator==(const EvaluatorVerdict&, const EvaluatorVerdict&) = default;
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual EvaluatorVerdict evaluate(const ReasoningRecord& perturbed,
                                    const ReasoningRecord& benign) const = 0;
  virtual std::string id() const = 0;
};

class BuiltinEvaluator : public Evaluator {
 public:
  EvaluatorVerdict evaluate(const ReasoningRecord& perturbed,
                            const ReasoningRecord& benign) const override {
    EvaluatorVerdict v;
    for (ReasoningField f : kReasoningFields) {
      v.fields[static_cast<std::size_t>(f)] = semantic_deviation(perturbed, benign, scope_of(f));
    }
    v.overall = semantic_deviation(perturbed, benign, SemanticScope::All);
    return v;
  }
  std::string id() const override { return "builtin"; }
};

inline nlohmann::json evaluate_request_json(const ReasoningRecord& perturbed,
                                            const ReasoningRecord& benign) {
  return {{"version", kProtocolVersion}, {"perturbed", to_json(perturbed)},
          {"benign", to_json(benign)}};
}

inline nlohmann::json to_json(const EvaluatorVerdict& v) {
  nlohmann::json verdict;
  for (ReasoningField f : kReasoningFields) {
    verdict[std::string(to_string(f))] = v.fields[static_cast<std::size_t>(f)];
  }
  verdict["overall"] = v.overall;
  return {{"version", kProtocolVersion}, {"verdict", verdict}};
}

// Validates ranges; an out-of-range score is rejected naming its field.
inline EvaluatorVerdict verdict_from_json(const nlohmann::json& j) {
  using namespace wire;
  if (!j.is_object()) throw ProtocolError("response", "expected an object");
  if (j.contains("error")) {
    throw ProtocolError("error", "evaluator reported: " + j["error"].dump());
  }
  check_version(j);
  const json& body = member(j, "verdict", "");
  EvaluatorVerdict v;
  v.external = true;
  auto in_range = [&](const char* key) {
    const double s = num_field(body, key, "verdict");
    if (s < 0.0 || s > 1.0) throw ProtocolError(key, "score outside [0, 1]");
    return s;
  };
  for (ReasoningField f : kReasoningFields) {
    const std::string key(to_string(f));
    v.fields[static_cast<std::size_t>(f)] = in_range(key.c_str());
  }
  v.overall = in_range("overall");
  return v;
}

class ExternalEvaluator : public Evaluator {
 public:
  explicit ExternalEvaluator(std::shared_ptr<const Transport> transport)
      : transport_(std::move(transport)) {}

  EvaluatorVerdict evaluate(const ReasoningRecord& perturbed,
                            const ReasoningRecord& benign) const override {
    return verdict_from_json(
        transport_->exchange(RemoteOp::Evaluate, evaluate_request_json(perturbed, benign)));
  }
  std::string id() const override { return "external:" + transport_->describe(); }

 private:
  std::shared_ptr<const Transport> transport_;
};

// Memoizes verdicts keyed by (perturbed record, benign record, backend id).
// First insert wins; concurrent callers may both compute but see one value.
class CachingEvaluator : public Evaluator {
 public:
  explicit CachingEvaluator(std::shared_ptr<const Evaluator> inner) : inner_(std::move(inner)) {}

  EvaluatorVerdict evaluate(const ReasoningRecord& perturbed,
                            const ReasoningRecord& benign) const override {
    Key key{fingerprint(perturbed), fingerprint(benign), inner_->id()};
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    EvaluatorVerdict v = inner_->evaluate(perturbed, benign);
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.try_emplace(std::move(key), v).first->second;
  }
  std::string id() const override { return inner_->id(); }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.size();
  }

 private:
  using Key = std::tuple<std::string, std::string, std::string>;

  static std::string fingerprint(const ReasoningRecord& r) {
    std::string out = r.full_text;
    for (ReasoningField f : kReasoningFields) {
      out.push_back('\x1f');
      out += r.field(f);
    }
    return out;
  }

  std::shared_ptr<const Evaluator> inner_;
  mutable std::mutex mu_;
  mutable std::map<Key, EvaluatorVerdict> cache_;
};

// Server side of /v1/evaluate.
inline nlohmann::json handle_evaluate(const Evaluator& evaluator, const nlohmann::json& request) {
  try {
    if (!request.is_object()) throw ProtocolError("request", "expected an object");
    wire::check_version(request);
    const ReasoningRecord p = reasoning_from_json(wire::member(request, "perturbed", ""));
    const ReasoningRecord b = reasoning_from_json(wire::member(request, "benign", ""));
    return to_json(evaluator.evaluate(p, b));
  } catch (const ProtocolError& e) {
    return error_json("bad_request", e.what());
  } catch (const std::exception& e) {
    return error_json("evaluator_error", e.what());
  }
}

}  // namespace vlaprobe
