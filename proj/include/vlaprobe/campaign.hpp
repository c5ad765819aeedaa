#pragma once

// Campaign runner. A campaign config (JSON, "config_version": 1) names the
// scenarios, the model backend, the mode and every threshold; the runner
// executes the base point and each sweep point over all scenarios and
// writes a report bundle:
//
//   <output_dir>/manifest.json          config echo, versions, scenario hashes and seeds
//   <output_dir>/summary.txt            every table, aligned text
//   <output_dir>/sweep.csv              label, axis, value, target, asr (plot-ready)
//   <output_dir>/<label>/records.jsonl  header + one record per scenario
//   <output_dir>/<label>/table.{csv,txt}
//   <output_dir>/<label>/bootstrap.csv              open mode
//   <output_dir>/<label>/incidents.csv, incident_counts.csv   closed mode
//   <output_dir>/<label>/traces/<id>.{benign,perturbed}.tsv   closed, trace_dump
//
// Sweeps vary one axis at a time around the base point. k and epsilon
// re-score the base closed-loop traces; the other axes re-run.
// Per-scenario corruption seeds are scenario_seed(seed, scenario id).

#include <fnmatch.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vlaprobe/attack_closed.hpp"
#include "vlaprobe/attack_common.hpp"
#include "vlaprobe/attack_open.hpp"
#include "vlaprobe/corruption.hpp"
#include "vlaprobe/errors.hpp"
#include "vlaprobe/evaluator.hpp"
#include "vlaprobe/mock_model.hpp"
#include "vlaprobe/model.hpp"
#include "vlaprobe/normalize.hpp"
#include "vlaprobe/reasoning_eval.hpp"
#include "vlaprobe/remote.hpp"
#include "vlaprobe/report.hpp"
#include "vlaprobe/scenario.hpp"
#include "vlaprobe/transport.hpp"
#include "vlaprobe/version.hpp"

namespace vlaprobe {

inline constexpr int kCampaignConfigVersion = 1;

struct BackendSpec {
  enum class Kind : std::uint8_t { Builtin, Http, Stdio };  // Builtin = mock model / builtin evaluator
  Kind kind = Kind::Builtin;
  std::string endpoint;              // http
  std::vector<std::string> command;  // stdio argv
  int timeout_ms = 30000;
};

struct CorpusVariant {
  std::string label;
  std::vector<std::string> scenarios;
};

struct SweepSpec {
  std::vector<double> sigma;
  std::vector<std::size_t> n_queries;  // open
  std::vector<std::size_t> k;          // closed
  std::vector<double> epsilon;         // closed, trajectory epsilon (m)
  std::vector<CorpusVariant> corpora;
  bool empty() const {
    return sigma.empty() && n_queries.empty() && k.empty() && epsilon.empty() && corpora.empty();
  }
};

struct CampaignConfig {
  std::vector<std::string> scenarios;
  BackendSpec model;
  BackendSpec evaluator;
  CampaignMode mode = CampaignMode::Open;
  std::size_t n_queries = 100;
  TargetSet targets = TargetSet::all();
  bool early_stop = true;
  AttackThresholds thresholds;
  CorruptionSpec corruption;
  RolloutConfig rollout;
  SafetyConfig safety;
  bool defense = false;
  std::string vocab;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t bootstrap_resamples = 1000;
  bool trace_dump = false;
  SweepSpec sweep;
  std::filesystem::path base_dir = ".";  // relative paths resolve against this

  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }

  void check() const {
    if (scenarios.empty()) throw DomainError("config: scenarios must be non-empty");
    if (n_queries == 0) throw DomainError("config: attack.n_queries must be >= 1");
    if (targets.empty()) throw DomainError("config: attack.targets must be non-empty");
    thresholds.check();
    corruption.check();
    rollout.check();
    safety.check();
    if (defense && vocab.empty()) throw DomainError("config: defense=normalize needs a vocab path");
    if (workers == 0) throw DomainError("config: workers must be >= 1");
    if (bootstrap_resamples < 100) throw DomainError("config: bootstrap_resamples must be >= 100");
    if (model.kind == BackendSpec::Kind::Http && model.endpoint.empty()) {
      throw DomainError("config: model.endpoint required for http");
    }
    if (model.kind == BackendSpec::Kind::Stdio && model.command.empty()) {
      throw DomainError("config: model.command required for stdio");
    }
    if (mode == CampaignMode::Open && (!sweep.k.empty() || !sweep.epsilon.empty())) {
      throw DomainError("config: k and epsilon sweeps apply to closed mode");
    }
    if (mode == CampaignMode::Closed && !sweep.n_queries.empty()) {
      throw DomainError("config: n_queries sweep applies to open mode");
    }
    for (double s : sweep.sigma) {
      if (!(s >= 0.0 && s <= 1.0)) throw DomainError("config: sweep sigma outside [0, 1]");
    }
    for (std::size_t n : sweep.n_queries) {
      if (n == 0) throw DomainError("config: sweep n_queries must be >= 1");
    }
    for (double e : sweep.epsilon) {
      if (!(e > 0.0)) throw DomainError("config: sweep epsilon must be > 0");
    }
    std::set<std::string> labels;
    for (const auto& c : sweep.corpora) {
      if (c.label.empty() || c.scenarios.empty()) {
        throw DomainError("config: each sweep corpus needs a label and scenarios");
      }
      if (!labels.insert(c.label).second) throw DomainError("config: duplicate corpus label");
    }
  }
};

// ---------------------------------------------------------------------------
// Config JSON

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys,
                           const std::string& where) {
  for (const auto& [k, _] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ParseError("config: unknown key '" + where + k + "'");
  }
}

inline std::vector<std::string> string_list(const nlohmann::json& j) {
  if (j.is_string()) return {j.get<std::string>()};
  return j.get<std::vector<std::string>>();
}

inline BackendSpec backend_from_json(const nlohmann::json& j, const std::string& where) {
  reject_unknown(j, {"kind", "endpoint", "command", "timeout_ms"}, where + ".");
  BackendSpec b;
  const std::string kind = j.value("kind", "builtin");
  if (kind == "mock" || kind == "builtin") {
    b.kind = BackendSpec::Kind::Builtin;
  } else if (kind == "http") {
    b.kind = BackendSpec::Kind::Http;
  } else if (kind == "stdio") {
    b.kind = BackendSpec::Kind::Stdio;
  } else {
    throw ParseError("config: unknown " + where + ".kind '" + kind + "'");
  }
  b.endpoint = j.value("endpoint", "");
  if (j.contains("command")) b.command = string_list(j.at("command"));
  b.timeout_ms = j.value("timeout_ms", b.timeout_ms);
  if (b.timeout_ms <= 0) throw ParseError("config: " + where + ".timeout_ms must be > 0");
  return b;
}

inline nlohmann::json backend_json(const BackendSpec& b, bool model) {
  nlohmann::json j;
  switch (b.kind) {
    case BackendSpec::Kind::Builtin: j["kind"] = model ? "mock" : "builtin"; return j;
    case BackendSpec::Kind::Http: j["kind"] = "http"; j["endpoint"] = b.endpoint; break;
    case BackendSpec::Kind::Stdio: j["kind"] = "stdio"; j["command"] = b.command; break;
  }
  j["timeout_ms"] = b.timeout_ms;
  return j;
}

}  // namespace detail

// `forced_mode` (from the CLI subcommand) wins over the file's "mode".
inline CampaignConfig campaign_config_from_json(const nlohmann::json& j,
                                                const std::filesystem::path& base_dir = ".",
                                                std::optional<CampaignMode> forced_mode = {}) {
  using detail::reject_unknown;
  CampaignConfig c;
  c.base_dir = base_dir;
  try {
    if (!j.is_object()) throw ParseError("config: document must be an object");
    reject_unknown(j,
                   {"config_version", "scenarios", "model", "evaluator", "mode", "attack",
                    "corruption", "rollout", "safety", "defense", "vocab", "output_dir", "seed",
                    "workers", "bootstrap_resamples", "trace_dump", "sweep"},
                   "");
    if (j.value("config_version", 0) != kCampaignConfigVersion) {
      throw ParseError("config: config_version must be 1");
    }
    c.scenarios = detail::string_list(j.at("scenarios"));
    if (j.contains("model")) c.model = detail::backend_from_json(j.at("model"), "model");
    if (j.contains("evaluator")) {
      c.evaluator = detail::backend_from_json(j.at("evaluator"), "evaluator");
    }
    const std::string mode = j.value("mode", "open");
    if (mode != "open" && mode != "closed") throw ParseError("config: mode must be open|closed");
    c.mode = mode == "open" ? CampaignMode::Open : CampaignMode::Closed;
    if (forced_mode) c.mode = *forced_mode;
    if (j.contains("attack")) {
      const auto& a = j.at("attack");
      reject_unknown(a, {"n_queries", "targets", "early_stop", "delta_sem", "rho", "delta_traj"},
                     "attack.");
      c.n_queries = a.value("n_queries", c.n_queries);
      c.early_stop = a.value("early_stop", c.early_stop);
      c.thresholds.reasoning.delta_sem = a.value("delta_sem", c.thresholds.reasoning.delta_sem);
      c.thresholds.reasoning.rho = a.value("rho", c.thresholds.reasoning.rho);
      c.thresholds.delta_traj = a.value("delta_traj", c.thresholds.delta_traj);
      if (a.contains("targets")) {
        c.targets = TargetSet{};
        for (const auto& name : detail::string_list(a.at("targets"))) {
          const auto t = attack_target_from_string(name);
          if (!t) throw ParseError("config: unknown target '" + name + "'");
          c.targets.insert(*t);
        }
      }
    }
    if (j.contains("corruption")) {
      reject_unknown(j.at("corruption"), {"sigma", "operators", "channel"}, "corruption.");
      c.corruption = corruption_spec_from_json(j.at("corruption"));
    }
    if (j.contains("rollout")) {
      reject_unknown(j.at("rollout"),
                     {"sim_dt", "replan_interval", "k", "epsilon_traj", "epsilon_sem",
                      "slowdown_excess", "epsilon_dos", "success_mode"},
                     "rollout.");
      c.rollout = rollout_config_from_json(j.at("rollout"));
    }
    if (j.contains("safety")) {
      reject_unknown(j.at("safety"),
                     {"near_encounter_gap", "ttc_cap_ms", "ttc_dt", "ego_half_length",
                      "ego_half_width"},
                     "safety.");
      c.safety = safety_config_from_json(j.at("safety"));
    }
    const std::string defense = j.value("defense", "off");
    if (defense != "off" && defense != "normalize") {
      throw ParseError("config: defense must be off|normalize");
    }
    c.defense = defense == "normalize";
    c.vocab = j.value("vocab", "");
    c.output_dir = j.value("output_dir", c.output_dir);
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    c.bootstrap_resamples = j.value("bootstrap_resamples", c.bootstrap_resamples);
    c.trace_dump = j.value("trace_dump", c.trace_dump);
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      reject_unknown(s, {"sigma", "n_queries", "k", "epsilon", "corpora"}, "sweep.");
      c.sweep.sigma = s.value("sigma", std::vector<double>{});
      c.sweep.n_queries = s.value("n_queries", std::vector<std::size_t>{});
      c.sweep.k = s.value("k", std::vector<std::size_t>{});
      c.sweep.epsilon = s.value("epsilon", std::vector<double>{});
      if (s.contains("corpora")) {
        for (const auto& jc : s.at("corpora")) {
          reject_unknown(jc, {"label", "scenarios"}, "sweep.corpora[].");
          c.sweep.corpora.push_back(
              {jc.at("label").get<std::string>(), detail::string_list(jc.at("scenarios"))});
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  c.check();
  return c;
}

inline CampaignConfig load_campaign_config(const std::filesystem::path& path,
                                           std::optional<CampaignMode> forced_mode = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: malformed JSON: ") + e.what());
  }
  return campaign_config_from_json(j, path.parent_path().empty() ? "." : path.parent_path(),
                                   forced_mode);
}

inline nlohmann::json to_json(const CampaignConfig& c) {
  nlohmann::json targets = nlohmann::json::array();
  for (AttackTarget t : c.targets.ordered()) targets.push_back(std::string(to_string(t)));
  nlohmann::json sweep = {{"sigma", c.sweep.sigma},
                          {"n_queries", c.sweep.n_queries},
                          {"k", c.sweep.k},
                          {"epsilon", c.sweep.epsilon}};
  nlohmann::json corpora = nlohmann::json::array();
  for (const auto& v : c.sweep.corpora) corpora.push_back({{"label", v.label}, {"scenarios", v.scenarios}});
  sweep["corpora"] = corpora;
  return {{"config_version", kCampaignConfigVersion},
          {"scenarios", c.scenarios},
          {"model", detail::backend_json(c.model, true)},
          {"evaluator", detail::backend_json(c.evaluator, false)},
          {"mode", std::string(to_string(c.mode))},
          {"attack",
           {{"n_queries", c.n_queries},
            {"targets", targets},
            {"early_stop", c.early_stop},
            {"delta_sem", c.thresholds.reasoning.delta_sem},
            {"rho", c.thresholds.reasoning.rho},
            {"delta_traj", c.thresholds.delta_traj}}},
          {"corruption", to_json(c.corruption)},
          {"rollout", to_json(c.rollout)},
          {"safety", to_json(c.safety)},
          {"defense", c.defense ? "normalize" : "off"},
          {"vocab", c.vocab},
          {"output_dir", c.output_dir},
          {"seed", c.seed},
          {"workers", c.workers},
          {"bootstrap_resamples", c.bootstrap_resamples},
          {"trace_dump", c.trace_dump},
          {"sweep", sweep}};
}

// ---------------------------------------------------------------------------
// Scenario resolution

// Each entry is a file, a directory (all *.json inside) or a pattern whose
// last component holds shell wildcards. Result is sorted and de-duplicated.
inline std::vector<std::filesystem::path> resolve_scenario_paths(
    const std::vector<std::string>& entries, const std::filesystem::path& base_dir) {
  namespace fs = std::filesystem;
  std::set<fs::path> out;
  for (const auto& e : entries) {
    const fs::path p = fs::path(e).is_absolute() ? fs::path(e) : base_dir / e;
    const std::string name = p.filename().string();
    if (name.find_first_of("*?[") != std::string::npos) {
      const fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
      if (!fs::is_directory(dir)) throw ParseError("scenario directory not found: " + dir.string());
      std::size_t hits = 0;
      for (const auto& de : fs::directory_iterator(dir)) {
        if (de.is_regular_file() && fnmatch(name.c_str(), de.path().filename().c_str(), 0) == 0) {
          out.insert(de.path());
          ++hits;
        }
      }
      if (hits == 0) throw ParseError("no scenario files match " + p.string());
    } else if (fs::is_directory(p)) {
      for (const auto& de : fs::directory_iterator(p)) {
        if (de.is_regular_file() && de.path().extension() == ".json") out.insert(de.path());
      }
    } else if (fs::is_regular_file(p)) {
      out.insert(p);
    } else {
      throw ParseError("scenario path not found: " + p.string());
    }
  }
  if (out.empty()) throw ParseError("no scenario files found");
  return {out.begin(), out.end()};
}

struct LoadedScenario {
  Scenario scenario;
  std::filesystem::path path;
  std::uint64_t content_hash = 0;
};

// Loads and validates; duplicate ids are a config error. Sorted by id.
inline std::vector<LoadedScenario> load_scenarios(const std::vector<std::string>& entries,
                                                  const std::filesystem::path& base_dir) {
  std::vector<LoadedScenario> out;
  for (const auto& p : resolve_scenario_paths(entries, base_dir)) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    LoadedScenario ls;
    try {
      ls.scenario = parse_scenario(text);
    } catch (const ValidationError& e) {
      std::vector<std::string> v;
      for (const auto& msg : e.violations()) v.push_back(p.filename().string() + ": " + msg);
      throw ValidationError(std::move(v));
    } catch (const ParseError& e) {
      throw ParseError(p.string() + ": " + e.what());
    }
    ls.path = p;
    ls.content_hash = fnv1a64(text);
    out.push_back(std::move(ls));
  }
  std::sort(out.begin(), out.end(),
            [](const LoadedScenario& a, const LoadedScenario& b) { return a.scenario.id < b.scenario.id; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].scenario.id == out[i - 1].scenario.id) {
      throw ParseError("duplicate scenario id '" + out[i].scenario.id + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Execution

// Runs fn(i) for i in [0, n) on `workers` threads; results land by index.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct Backends {
  std::shared_ptr<const Model> model;
  std::shared_ptr<const Evaluator> evaluator;
};

inline std::shared_ptr<const Transport> make_transport(const BackendSpec& b) {
  if (b.kind == BackendSpec::Kind::Http) return std::make_shared<HttpTransport>(b.endpoint, b.timeout_ms);
  return std::make_shared<StdioTransport>(b.command, b.timeout_ms);
}

inline Backends make_backends(const CampaignConfig& c, const std::vector<Scenario>& scenarios) {
  Backends b;
  if (c.model.kind == BackendSpec::Kind::Builtin) {
    b.model = std::make_shared<MockModel>(scenarios);
  } else {
    b.model = std::make_shared<RemoteModel>(make_transport(c.model));
  }
  std::shared_ptr<const Evaluator> inner;
  if (c.evaluator.kind == BackendSpec::Kind::Builtin) {
    inner = std::make_shared<BuiltinEvaluator>();
  } else {
    inner = std::make_shared<ExternalEvaluator>(make_transport(c.evaluator));
  }
  b.evaluator = std::make_shared<CachingEvaluator>(inner);
  return b;
}

struct SweepPoint {
  std::string label;  // directory name
  std::string axis;   // base, sigma, n_queries, k, epsilon, corpus
  std::string value;
  RecordSet records;
};

struct CampaignBundle {
  nlohmann::json manifest;
  std::vector<SweepPoint> points;  // base first
  std::map<std::string, std::vector<ClosedLoopRun>> traces;  // closed mode, by label
  bool failed = false;  // every base scenario errored
};

struct CampaignPlan {
  CampaignConfig config;
  std::vector<LoadedScenario> base;
  std::map<std::string, std::vector<LoadedScenario>> corpora;  // sweep variants
  std::optional<TextDefense> defense;
};

inline CampaignPlan plan_campaign(const CampaignConfig& config) {
  config.check();
  CampaignPlan plan;
  plan.config = config;
  plan.base = load_scenarios(config.scenarios, config.base_dir);
  for (const auto& v : config.sweep.corpora) {
    plan.corpora[v.label] = load_scenarios(v.scenarios, config.base_dir);
  }
  if (config.defense) {
    plan.defense = TextDefense(
        std::make_shared<const Vocabulary>(Vocabulary::load(config.resolve(config.vocab))));
  }
  if (config.corruption.channel == TextChannel::Nav) {
    for (const auto& ls : plan.base) {
      if (!ls.scenario.nav_command) {
        throw DomainError("config: channel Nav but scenario '" + ls.scenario.id + "' has no nav");
      }
    }
  }
  return plan;
}

inline std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

namespace detail {

inline std::vector<Scenario> scenarios_of(const std::vector<LoadedScenario>& ls) {
  std::vector<Scenario> out;
  out.reserve(ls.size());
  for (const auto& l : ls) out.push_back(l.scenario);
  return out;
}

inline std::vector<AttackOutcome> run_open_point(const std::vector<Scenario>& scenarios,
                                                 const Backends& b, const CampaignConfig& c,
                                                 const CorruptionSpec& corruption,
                                                 std::size_t n_queries, const TextDefense& defense) {
  std::vector<AttackOutcome> out(scenarios.size());
  parallel_for(scenarios.size(), c.workers, [&](std::size_t i) {
    const Scenario& s = scenarios[i];
    AttackConfig ac;
    ac.n_queries = n_queries;
    ac.targets = c.targets;
    ac.thresholds = c.thresholds;
    ac.early_stop = c.early_stop;
    ac.corruption = corruption;
    ac.corruption.seed = scenario_seed(c.seed, s.id);
    try {
      out[i] = run_best_of_n(s, *b.model, ac, *b.evaluator, c.safety, defense);
    } catch (const std::exception& e) {
      AttackOutcome o;
      o.scenario_id = s.id;
      for (AttackTarget t : c.targets.ordered()) o.result(t).evaluated = true;
      o.error = e.what();
      out[i] = std::move(o);
    }
  });
  return out;
}

inline std::vector<ClosedLoopRun> run_closed_point(const std::vector<Scenario>& scenarios,
                                                   const Backends& b, const CampaignConfig& c,
                                                   const CorruptionSpec& corruption,
                                                   const TextDefense& defense) {
  std::vector<ClosedLoopRun> out(scenarios.size());
  parallel_for(scenarios.size(), c.workers, [&](std::size_t i) {
    const Scenario& s = scenarios[i];
    CorruptionSpec cs = corruption;
    cs.seed = scenario_seed(c.seed, s.id);
    try {
      out[i] = run_closed_loop(s, *b.model, cs, c.targets, c.rollout, *b.evaluator, c.safety, defense);
    } catch (const std::exception& e) {
      out[i].scenario_id = s.id;
      out[i].error = e.what();
    }
  });
  return out;
}

inline std::vector<ClosedRecord> closed_records(const std::vector<ClosedLoopRun>& runs,
                                                const RolloutConfig& rc) {
  std::vector<ClosedRecord> out;
  out.reserve(runs.size());
  for (const auto& r : runs) out.push_back(closed_record(r, rc));
  return out;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace detail

inline nlohmann::json campaign_manifest(const CampaignPlan& plan, const Backends& b) {
  using nlohmann::json;
  const CampaignConfig& c = plan.config;
  auto listing = [&](const std::vector<LoadedScenario>& ls) {
    json arr = json::array();
    for (const auto& l : ls) {
      arr.push_back({{"id", l.scenario.id},
                     {"file", l.path.filename().string()},
                     {"fnv1a64", detail::hex64(l.content_hash)},
                     {"corruption_seed", scenario_seed(c.seed, l.scenario.id)}});
    }
    return arr;
  };
  json corpora = json::object();
  for (const auto& [label, ls] : plan.corpora) corpora[label] = listing(ls);
  return {{"tool", "vlaprobe"},
          {"version", kVersion},
          {"tokenizer", std::string(kTokenizerVersion)},
          {"protocol_version", kProtocolVersion},
          {"scenario_schema_version", kScenarioSchemaVersion},
          {"model", b.model->id()},
          {"evaluator", b.evaluator->id()},
          {"seed_derivation", "corruption seed = derive_seed(seed, fnv1a64(scenario_id)); query i uses derive_seed(corruption seed, i)"},
          {"config", to_json(c)},
          {"scenarios", listing(plan.base)},
          {"sweep_corpora", corpora}};
}

inline CampaignBundle run_campaign(const CampaignPlan& plan) {
  const CampaignConfig& c = plan.config;
  CampaignBundle bundle;
  const TextDefense defense = plan.defense.value_or(TextDefense{});
  const std::vector<Scenario> base = detail::scenarios_of(plan.base);
  const Backends backends = make_backends(c, base);
  bundle.manifest = campaign_manifest(plan, backends);

  auto header = [&](const std::string& label) {
    ReportHeader h;
    h.mode = c.mode;
    h.label = label;
    h.model_id = backends.model->id();
    h.evaluator_id = backends.evaluator->id();
    h.defense = c.defense;
    h.seed = c.seed;
    h.corruption = c.corruption;
    h.n_queries = c.n_queries;
    h.thresholds = c.thresholds;
    h.rollout = c.rollout;
    h.safety = c.safety;
    h.bootstrap_resamples = c.bootstrap_resamples;
    return h;
  };

  auto add_open = [&](std::string label, std::string axis, std::string value,
                      const std::vector<Scenario>& scenarios, const Backends& b,
                      const CorruptionSpec& cs, std::size_t n) {
    SweepPoint p{std::move(label), std::move(axis), std::move(value), {}};
    p.records.header = header(p.label);
    p.records.header.corruption = cs;
    p.records.header.n_queries = n;
    p.records.open = detail::run_open_point(scenarios, b, c, cs, n, defense);
    bundle.points.push_back(std::move(p));
  };
  auto add_closed = [&](std::string label, std::string axis, std::string value,
                        std::vector<ClosedLoopRun> runs, const CorruptionSpec& cs,
                        const RolloutConfig& rc) {
    SweepPoint p{std::move(label), std::move(axis), std::move(value), {}};
    p.records.header = header(p.label);
    p.records.header.corruption = cs;
    p.records.header.rollout = rc;
    p.records.closed = detail::closed_records(runs, rc);
    if (c.trace_dump) bundle.traces[p.label] = std::move(runs);
    bundle.points.push_back(std::move(p));
  };

  if (c.mode == CampaignMode::Open) {
    add_open("base", "base", "", base, backends, c.corruption, c.n_queries);
    for (double s : c.sweep.sigma) {
      CorruptionSpec cs = c.corruption;
      cs.sigma = s;
      add_open("sigma-" + format_value(s), "sigma", format_value(s), base, backends, cs, c.n_queries);
    }
    for (std::size_t n : c.sweep.n_queries) {
      add_open("n_queries-" + std::to_string(n), "n_queries", std::to_string(n), base, backends,
               c.corruption, n);
    }
    for (const auto& [label, ls] : plan.corpora) {
      const std::vector<Scenario> sc = detail::scenarios_of(ls);
      const Backends b = c.model.kind == BackendSpec::Kind::Builtin
                             ? Backends{std::make_shared<MockModel>(sc), backends.evaluator}
                             : backends;
      add_open("corpus-" + label, "corpus", label, sc, b, c.corruption, c.n_queries);
    }
  } else {
    std::vector<ClosedLoopRun> base_runs =
        detail::run_closed_point(base, backends, c, c.corruption, defense);
    for (std::size_t k : c.sweep.k) {
      RolloutConfig rc = c.rollout;
      rc.k = k;
      add_closed("k-" + std::to_string(k), "k", std::to_string(k), {}, c.corruption, rc);
      bundle.points.back().records.closed = detail::closed_records(base_runs, rc);
    }
    for (double e : c.sweep.epsilon) {
      RolloutConfig rc = c.rollout;
      rc.epsilon_traj = e;
      add_closed("epsilon-" + format_value(e), "epsilon", format_value(e), {}, c.corruption, rc);
      bundle.points.back().records.closed = detail::closed_records(base_runs, rc);
    }
    for (double s : c.sweep.sigma) {
      CorruptionSpec cs = c.corruption;
      cs.sigma = s;
      add_closed("sigma-" + format_value(s), "sigma", format_value(s),
                 detail::run_closed_point(base, backends, c, cs, defense), cs, c.rollout);
    }
    for (const auto& [label, ls] : plan.corpora) {
      const std::vector<Scenario> sc = detail::scenarios_of(ls);
      const Backends b = c.model.kind == BackendSpec::Kind::Builtin
                             ? Backends{std::make_shared<MockModel>(sc), backends.evaluator}
                             : backends;
      add_closed("corpus-" + label, "corpus", label,
                 detail::run_closed_point(sc, b, c, c.corruption, defense), c.corruption,
                 c.rollout);
    }
    // Base goes first in the bundle.
    add_closed("base", "base", "", std::move(base_runs), c.corruption, c.rollout);
    std::rotate(bundle.points.begin(), bundle.points.end() - 1, bundle.points.end());
  }

  const SweepPoint& b0 = bundle.points.front();
  bundle.failed = true;
  if (c.mode == CampaignMode::Open) {
    for (const auto& o : b0.records.open) bundle.failed = bundle.failed && o.error.has_value();
  } else {
    for (const auto& r : b0.records.closed) bundle.failed = bundle.failed && r.error.has_value();
  }
  return bundle;
}

// ASR per (point, target) for plotting.
inline Table sweep_table(const CampaignBundle& bundle) {
  Table t;
  t.columns = {"label", "axis", "value", "target", "asr"};
  for (const auto& p : bundle.points) {
    for (AttackTarget target : kAllAttackTargets) {
      double asr = 0.0;
      if (p.records.header.mode == CampaignMode::Open) {
        if (p.records.open.empty() || !p.records.open.front().result(target).evaluated) continue;
        asr = asr_open(p.records.open, target);
      } else {
        if (p.records.closed.empty() || !requested(p.records.closed, target)) continue;
        asr = asr_closed(std::span<const ClosedRecord>(p.records.closed), target);
      }
      t.rows.push_back({p.label, p.axis, p.value, std::string(to_string(target)),
                        detail::fmt("%.6f", asr)});
    }
  }
  return t;
}

inline void write_bundle(const CampaignBundle& bundle, const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  fs::create_directories(out);
  auto open_file = [](const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("cannot write " + p.string());
    return f;
  };
  {
    auto f = open_file(out / "manifest.json");
    f << bundle.manifest.dump(2) << '\n';
  }
  std::ostringstream summary;
  for (const auto& p : bundle.points) {
    const fs::path dir = out / p.label;
    fs::create_directories(dir);
    {
      auto f = open_file(dir / "records.jsonl");
      write_records(f, p.records);
    }
    const Table main = render_report(p.records);
    {
      auto f = open_file(dir / "table.csv");
      write_csv(f, main);
    }
    {
      auto f = open_file(dir / "table.txt");
      write_text(f, main);
    }
    summary << "== " << p.label << " ==\n";
    write_text(summary, main);
    if (p.records.header.mode == CampaignMode::Open) {
      auto f = open_file(dir / "bootstrap.csv");
      write_csv(f, bootstrap_table(p.records.header, p.records.open));
    } else {
      const Table timing = incident_timing_table(p.records.header, p.records.closed);
      const Table counts = incident_count_table(p.records.header, p.records.closed);
      {
        auto f = open_file(dir / "incidents.csv");
        write_csv(f, timing);
      }
      {
        auto f = open_file(dir / "incident_counts.csv");
        write_csv(f, counts);
      }
      summary << '\n';
      write_text(summary, counts);
    }
    summary << '\n';
    if (const auto it = bundle.traces.find(p.label); it != bundle.traces.end()) {
      fs::create_directories(dir / "traces");
      for (const auto& run : it->second) {
        if (run.error) continue;
        auto fb = open_file(dir / "traces" / (run.scenario_id + ".benign.tsv"));
        write_trace_tsv(fb, run.benign);
        auto fp = open_file(dir / "traces" / (run.scenario_id + ".perturbed.tsv"));
        write_trace_tsv(fp, run.perturbed);
      }
    }
  }
  {
    auto f = open_file(out / "summary.txt");
    f << summary.str();
  }
  {
    auto f = open_file(out / "sweep.csv");
    write_csv(f, sweep_table(bundle));
  }
}

}  // namespace vlaprobe
