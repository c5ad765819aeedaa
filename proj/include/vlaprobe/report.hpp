#pragma once

// Result records and table rendering.
//
// A records file is JSON Lines: one header object ({"kind":"header", ...})
// carrying the mode, model, thresholds and safety defaults, then one
// {"kind":"scenario", ...} object per scenario in id order. Tables are
// rendered from records alone, so a campaign bundle can be re-rendered
// offline with `vlaprobe report`.

#include <array>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlaprobe/attack_closed.hpp"
#include "vlaprobe/attack_common.hpp"
#include "vlaprobe/attack_open.hpp"
#include "vlaprobe/corruption.hpp"
#include "vlaprobe/errors.hpp"
#include "vlaprobe/safety.hpp"

namespace vlaprobe {

enum class CampaignMode : std::uint8_t { Open, Closed };

inline std::string_view to_string(CampaignMode m) { return m == CampaignMode::Open ? "open" : "closed"; }

struct ReportHeader {
  CampaignMode mode = CampaignMode::Open;
  std::string label = "base";  // sweep point
  std::string model_id;
  std::string evaluator_id = "builtin";
  bool defense = false;
  std::uint64_t seed = 0;
  CorruptionSpec corruption;   // seed field unused; per-scenario seeds derive from `seed`
  std::size_t n_queries = 0;   // open only
  AttackThresholds thresholds; // open only
  RolloutConfig rollout;       // closed only
  SafetyConfig safety;
  std::size_t bootstrap_resamples = 1000;
};

// ---------------------------------------------------------------------------
// JSON helpers

namespace detail {

inline nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const SafetyMetrics& m) {
  using detail::opt_json;
  return {{"collision", opt_json(m.collision)},
          {"near_encounter", opt_json(m.near_encounter)},
          {"off_road", opt_json(m.off_road)},
          {"wrong_lane", opt_json(m.wrong_lane)},
          {"min_ttc_ms", m.min_ttc_ms}};
}

inline SafetyMetrics safety_metrics_from_json(const nlohmann::json& j) {
  using detail::opt_from;
  SafetyMetrics m;
  m.collision = opt_from(j, "collision");
  m.near_encounter = opt_from(j, "near_encounter");
  m.off_road = opt_from(j, "off_road");
  m.wrong_lane = opt_from(j, "wrong_lane");
  m.min_ttc_ms = j.at("min_ttc_ms").get<double>();
  return m;
}

inline nlohmann::json to_json(const SafetyConfig& c) {
  return {{"near_encounter_gap", c.near_encounter_gap}, {"ttc_cap_ms", c.ttc_cap_ms},
          {"ttc_dt", c.ttc_dt},                         {"ego_half_length", c.ego_half_length},
          {"ego_half_width", c.ego_half_width}};
}

inline SafetyConfig safety_config_from_json(const nlohmann::json& j) {
  SafetyConfig c;
  c.near_encounter_gap = j.value("near_encounter_gap", c.near_encounter_gap);
  c.ttc_cap_ms = j.value("ttc_cap_ms", c.ttc_cap_ms);
  c.ttc_dt = j.value("ttc_dt", c.ttc_dt);
  c.ego_half_length = j.value("ego_half_length", c.ego_half_length);
  c.ego_half_width = j.value("ego_half_width", c.ego_half_width);
  return c;
}

inline nlohmann::json to_json(const RolloutConfig& c) {
  return {{"sim_dt", c.sim_dt},
          {"replan_interval", c.replan_interval},
          {"k", c.k},
          {"epsilon_traj", c.epsilon_traj},
          {"epsilon_sem", c.epsilon_sem},
          {"slowdown_excess", c.slowdown_excess},
          {"epsilon_dos", c.epsilon_dos},
          {"success_mode", std::string(to_string(c.success_mode))}};
}

inline RolloutConfig rollout_config_from_json(const nlohmann::json& j) {
  RolloutConfig c;
  c.sim_dt = j.value("sim_dt", c.sim_dt);
  c.replan_interval = j.value("replan_interval", c.replan_interval);
  c.k = j.value("k", c.k);
  c.epsilon_traj = j.value("epsilon_traj", c.epsilon_traj);
  c.epsilon_sem = j.value("epsilon_sem", c.epsilon_sem);
  c.slowdown_excess = j.value("slowdown_excess", c.slowdown_excess);
  c.epsilon_dos = j.value("epsilon_dos", c.epsilon_dos);
  if (j.contains("success_mode")) {
    const auto m = success_mode_from_string(j.at("success_mode").get<std::string>());
    if (!m) throw ParseError("unknown success_mode '" + j.at("success_mode").get<std::string>() + "'");
    c.success_mode = *m;
  }
  return c;
}

inline nlohmann::json to_json(const CorruptionSpec& c) {
  nlohmann::json ops = nlohmann::json::array();
  for (CorruptionOp op : c.operators.ordered()) ops.push_back(std::string(to_string(op)));
  return {{"sigma", c.sigma}, {"operators", ops}, {"channel", std::string(to_string(c.channel))}};
}

inline CorruptionSpec corruption_spec_from_json(const nlohmann::json& j) {
  CorruptionSpec c;
  c.sigma = j.value("sigma", c.sigma);
  if (j.contains("operators")) {
    OperatorSet ops;
    for (const auto& name : j.at("operators")) {
      const auto op = corruption_op_from_string(name.get<std::string>());
      if (!op) throw ParseError("unknown corruption operator '" + name.get<std::string>() + "'");
      ops.insert(*op);
    }
    c.operators = ops;
  }
  if (j.contains("channel")) {
    const std::string ch = j.at("channel").get<std::string>();
    if (ch == "Instruction") {
      c.channel = TextChannel::Instruction;
    } else if (ch == "Nav") {
      c.channel = TextChannel::Nav;
    } else {
      throw ParseError("unknown channel '" + ch + "'");
    }
  }
  return c;
}

inline nlohmann::json to_json(const ReportHeader& h) {
  nlohmann::json j = {{"kind", "header"},
                      {"records_version", 1},
                      {"mode", std::string(to_string(h.mode))},
                      {"label", h.label},
                      {"model", h.model_id},
                      {"evaluator", h.evaluator_id},
                      {"defense", h.defense ? "normalize" : "off"},
                      {"seed", h.seed},
                      {"corruption", to_json(h.corruption)},
                      {"safety", to_json(h.safety)},
                      {"bootstrap_resamples", h.bootstrap_resamples}};
  if (h.mode == CampaignMode::Open) {
    j["n_queries"] = h.n_queries;
    j["thresholds"] = {{"delta_sem", h.thresholds.reasoning.delta_sem},
                       {"rho", h.thresholds.reasoning.rho},
                       {"delta_traj", h.thresholds.delta_traj}};
  } else {
    j["rollout"] = to_json(h.rollout);
  }
  return j;
}

inline ReportHeader report_header_from_json(const nlohmann::json& j) {
  ReportHeader h;
  if (j.value("kind", "") != "header") throw ParseError("records: first line must be the header");
  if (j.value("records_version", 0) != 1) throw ParseError("records: unsupported records_version");
  const std::string mode = j.at("mode").get<std::string>();
  if (mode != "open" && mode != "closed") throw ParseError("records: unknown mode '" + mode + "'");
  h.mode = mode == "open" ? CampaignMode::Open : CampaignMode::Closed;
  h.label = j.value("label", h.label);
  h.model_id = j.at("model").get<std::string>();
  h.evaluator_id = j.value("evaluator", h.evaluator_id);
  h.defense = j.value("defense", "off") == "normalize";
  h.seed = j.value("seed", std::uint64_t{0});
  h.corruption = corruption_spec_from_json(j.at("corruption"));
  h.safety = safety_config_from_json(j.at("safety"));
  h.bootstrap_resamples = j.value("bootstrap_resamples", h.bootstrap_resamples);
  if (h.mode == CampaignMode::Open) {
    h.n_queries = j.at("n_queries").get<std::size_t>();
    const auto& th = j.at("thresholds");
    h.thresholds.reasoning.delta_sem = th.at("delta_sem").get<double>();
    h.thresholds.reasoning.rho = th.at("rho").get<double>();
    h.thresholds.delta_traj = th.at("delta_traj").get<double>();
  } else {
    h.rollout = rollout_config_from_json(j.at("rollout"));
  }
  return h;
}

// ---------------------------------------------------------------------------
// Open-loop records

inline nlohmann::json to_json(const AttackOutcome& o) {
  using nlohmann::json;
  json targets = json::object();
  for (AttackTarget t : kAllAttackTargets) {
    const TargetResult& r = o.result(t);
    if (!r.evaluated) continue;
    json jt = {{"success", r.success}, {"best", r.best_value}};
    jt["queries"] = r.queries_to_success ? json(*r.queries_to_success) : json(nullptr);
    jt["text"] = r.winning_text ? json(*r.winning_text) : json(nullptr);
    jt["safety"] = r.safety_attacked ? to_json(*r.safety_attacked) : json(nullptr);
    targets[std::string(to_string(t))] = std::move(jt);
  }
  json j = {{"kind", "scenario"},
            {"scenario_id", o.scenario_id},
            {"error", o.error ? json(*o.error) : json(nullptr)},
            {"queries_used", o.queries_used},
            {"failed_queries", o.failed_queries},
            {"benign",
             {{"token_count", o.benign_reasoning.token_count},
              {"min_ade", o.benign_min_ade},
              {"safety", to_json(o.safety_benign)}}},
            {"targets", std::move(targets)}};
  return j;
}

// Restores the fields the tables use; reasoning text is not kept.
inline AttackOutcome attack_outcome_from_json(const nlohmann::json& j) {
  AttackOutcome o;
  o.scenario_id = j.at("scenario_id").get<std::string>();
  if (!j.at("error").is_null()) o.error = j.at("error").get<std::string>();
  o.queries_used = j.at("queries_used").get<std::size_t>();
  o.failed_queries = j.at("failed_queries").get<std::size_t>();
  const auto& b = j.at("benign");
  o.benign_reasoning.token_count = b.at("token_count").get<std::size_t>();
  o.benign_min_ade = b.at("min_ade").get<double>();
  o.safety_benign = safety_metrics_from_json(b.at("safety"));
  for (const auto& [name, jt] : j.at("targets").items()) {
    const auto t = attack_target_from_string(name);
    if (!t) throw ParseError("records: unknown target '" + name + "'");
    TargetResult& r = o.result(*t);
    r.evaluated = true;
    r.success = jt.at("success").get<bool>();
    r.best_value = jt.at("best").get<double>();
    if (!jt.at("queries").is_null()) r.queries_to_success = jt.at("queries").get<std::size_t>();
    if (!jt.at("text").is_null()) r.winning_text = jt.at("text").get<std::string>();
    if (!jt.at("safety").is_null()) r.safety_attacked = safety_metrics_from_json(jt.at("safety"));
  }
  return o;
}

// ---------------------------------------------------------------------------
// Closed-loop records

struct ClosedRecord {
  std::string scenario_id;
  std::optional<std::string> error;
  std::array<std::optional<bool>, kAttackTargetCount> success{};  // nullopt = not requested
  std::array<double, kAttackTargetCount> peak{};  // max Δ_t per target
  SafetyMetrics benign;
  SafetyMetrics perturbed;
  std::size_t failed_replans = 0;
};

inline ClosedRecord closed_record(const ClosedLoopRun& run, const RolloutConfig& config) {
  ClosedRecord r;
  r.scenario_id = run.scenario_id;
  r.error = run.error;
  if (run.error) return r;
  for (AttackTarget t : kAllAttackTargets) {
    const auto& s = run.deltas(t);
    if (s.empty()) continue;
    r.success[index_of(t)] = windowed_success(s, config, t);
    r.peak[index_of(t)] = *std::max_element(s.begin(), s.end());
  }
  r.benign = run.benign.incidents;
  r.perturbed = run.perturbed.incidents;
  r.failed_replans = run.benign.failed_replans + run.perturbed.failed_replans;
  return r;
}

inline nlohmann::json to_json(const ClosedRecord& r) {
  using nlohmann::json;
  json targets = json::object();
  for (AttackTarget t : kAllAttackTargets) {
    if (!r.success[index_of(t)]) continue;
    // +inf peaks (slowdown against an empty benign reasoning) are written as null.
    const double p = r.peak[index_of(t)];
    targets[std::string(to_string(t))] = {{"success", *r.success[index_of(t)]},
                                          {"peak", std::isfinite(p) ? json(p) : json(nullptr)}};
  }
  return {{"kind", "scenario"},
          {"scenario_id", r.scenario_id},
          {"error", r.error ? json(*r.error) : json(nullptr)},
          {"failed_replans", r.failed_replans},
          {"benign", to_json(r.benign)},
          {"perturbed", to_json(r.perturbed)},
          {"targets", std::move(targets)}};
}

inline ClosedRecord closed_record_from_json(const nlohmann::json& j) {
  ClosedRecord r;
  r.scenario_id = j.at("scenario_id").get<std::string>();
  if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
  r.failed_replans = j.at("failed_replans").get<std::size_t>();
  r.benign = safety_metrics_from_json(j.at("benign"));
  r.perturbed = safety_metrics_from_json(j.at("perturbed"));
  for (const auto& [name, jt] : j.at("targets").items()) {
    const auto t = attack_target_from_string(name);
    if (!t) throw ParseError("records: unknown target '" + name + "'");
    r.success[index_of(*t)] = jt.at("success").get<bool>();
    r.peak[index_of(*t)] = jt.at("peak").is_null() ? std::numeric_limits<double>::infinity()
                                                   : jt.at("peak").get<double>();
  }
  return r;
}

inline double asr_closed(std::span<const ClosedRecord> records, AttackTarget target) {
  if (records.empty()) throw DomainError("asr_closed: no scenarios");
  std::size_t hits = 0;
  for (const auto& r : records) {
    const auto& s = r.success[index_of(target)];
    hits += (!r.error && s && *s) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

inline bool requested(std::span<const ClosedRecord> records, AttackTarget target) {
  for (const auto& r : records) {
    if (r.success[index_of(target)]) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Records files

struct RecordSet {
  ReportHeader header;
  std::vector<AttackOutcome> open;
  std::vector<ClosedRecord> closed;
};

inline void write_records(std::ostream& os, const RecordSet& set) {
  os << to_json(set.header).dump() << '\n';
  if (set.header.mode == CampaignMode::Open) {
    for (const auto& o : set.open) os << to_json(o).dump() << '\n';
  } else {
    for (const auto& r : set.closed) os << to_json(r).dump() << '\n';
  }
}

inline RecordSet read_records(std::istream& in) {
  RecordSet set;
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      if (!have_header) {
        set.header = report_header_from_json(j);
        have_header = true;
        continue;
      }
      if (j.value("kind", "") != "scenario") throw ParseError("expected a scenario record");
      if (set.header.mode == CampaignMode::Open) {
        set.open.push_back(attack_outcome_from_json(j));
      } else {
        set.closed.push_back(closed_record_from_json(j));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("records line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("records line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw ParseError("records: missing header");
  return set;
}

// ---------------------------------------------------------------------------
// Tables

struct Table {
  std::vector<std::string> notes;  // threshold/default echo lines
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::string fmt2(const char* spec, double a, double b) {
  char buf[96];
  std::snprintf(buf, sizeof buf, spec, a, b);
  return buf;
}

// Display columns: UTF-8 continuation bytes do not count.
inline std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80 ? 1 : 0;
  return n;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace detail

inline void write_csv(std::ostream& os, const Table& t) {
  for (const auto& n : t.notes) os << "# " << n << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    os << (i ? "," : "") << detail::csv_field(t.columns[i]);
  }
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << detail::csv_field(row[i]);
    os << '\n';
  }
}

inline void write_text(std::ostream& os, const Table& t) {
  for (const auto& n : t.notes) os << "# " << n << '\n';
  std::vector<std::size_t> w(t.columns.size(), 0);
  for (std::size_t i = 0; i < t.columns.size(); ++i) w[i] = detail::display_width(t.columns[i]);
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size() && i < w.size(); ++i) {
      w[i] = std::max(w[i], detail::display_width(row[i]));
    }
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += "  ";
      out += cells[i];
      if (i + 1 < cells.size()) out.append(w[i] - detail::display_width(cells[i]), ' ');
    }
    os << out << '\n';
  };
  line(t.columns);
  std::vector<std::string> rule;
  for (std::size_t n : w) rule.emplace_back(n, '-');
  line(rule);
  for (const auto& row : t.rows) line(row);
}

inline std::string display_name(AttackTarget t) {
  switch (t) {
    case AttackTarget::Object: return "Object";
    case AttackTarget::Relation: return "Relation";
    case AttackTarget::Implication: return "Implication";
    case AttackTarget::Planning: return "Planning";
    case AttackTarget::All: return "Overall";
    case AttackTarget::Slowdown: return "Slowdown";
    case AttackTarget::Dos: return "DoS";
    case AttackTarget::Trajectory: return "ADE";
  }
  return "?";
}

inline std::string surface_of(AttackTarget t) {
  return t == AttackTarget::Trajectory ? "Trajectory" : "Reasoning";
}

inline std::string objective_of(AttackTarget t) {
  if (t == AttackTarget::Trajectory) return "Deviation";
  if (t == AttackTarget::Slowdown || t == AttackTarget::Dos) return "Structural";
  return "Semantic";
}

inline std::vector<std::string> header_notes(const ReportHeader& h) {
  using detail::fmt;
  std::vector<std::string> n;
  n.push_back("mode=" + std::string(to_string(h.mode)) + " label=" + h.label + " model=" +
              h.model_id + " evaluator=" + h.evaluator_id +
              " defense=" + (h.defense ? "normalize" : "off") + " seed=" + std::to_string(h.seed));
  std::string ops;
  for (CorruptionOp op : h.corruption.operators.ordered()) {
    ops += (ops.empty() ? "" : "|") + std::string(to_string(op));
  }
  n.push_back("corruption sigma=" + fmt("%g", h.corruption.sigma) + " operators=" + ops +
              " channel=" + std::string(to_string(h.corruption.channel)));
  if (h.mode == CampaignMode::Open) {
    n.push_back("N=" + std::to_string(h.n_queries) +
                " delta_sem=" + fmt("%g", h.thresholds.reasoning.delta_sem) +
                " rho=" + fmt("%g", h.thresholds.reasoning.rho) +
                " delta_traj_m=" + fmt("%g", h.thresholds.delta_traj) +
                " trajectory=min-ADE over modes; safety replays the min-ADE mode of each output");
  } else {
    const RolloutConfig& r = h.rollout;
    n.push_back("sim_dt=" + fmt("%g", r.sim_dt) + " replan=" + fmt("%g", r.replan_interval) +
                " k=" + std::to_string(r.k) + " eps_traj_m=" + fmt("%g", r.epsilon_traj) +
                " eps_sem=" + fmt("%g", r.epsilon_sem) +
                " slowdown_excess=" + fmt("%g", r.slowdown_excess) +
                " eps_dos=" + fmt("%g", r.epsilon_dos) +
                " success=" + std::string(to_string(r.success_mode)) +
                " executes trajectory mode 0; reference = ground truth / benign twin");
  }
  const SafetyConfig& s = h.safety;
  n.push_back("safety near_gap_m=" + fmt("%g", s.near_encounter_gap) +
              " ttc_cap_ms=" + fmt("%g", s.ttc_cap_ms) + " ttc_dt=" + fmt("%g", s.ttc_dt) +
              " ego_half_length=" + fmt("%g", s.ego_half_length) +
              " ego_half_width=" + fmt("%g", s.ego_half_width));
  return n;
}

// Model / Surface / Objective / Target / ASR / Queries / Coll.% (Δ) /
// N.-Enc.% (Δ) / TTC ms (Δ). Queries is the mean over successful instances;
// safety columns cover successful instances only ("n/a" when none).
inline Table open_loop_table(const ReportHeader& h, std::span<const AttackOutcome> outcomes) {
  using detail::fmt;
  using detail::fmt2;
  Table t;
  t.notes = header_notes(h);
  t.notes.push_back("scenarios=" + std::to_string(outcomes.size()) +
                    "; Queries = mean queries-to-success over successes");
  t.columns = {"Model",   "Surface", "Objective",     "Target",        "ASR",
               "Queries", "Coll.% (Δ)", "N.-Enc.% (Δ)", "TTC ms (Δ)"};
  if (outcomes.empty()) return t;
  for (AttackTarget target : kAllAttackTargets) {
    bool evaluated = false;
    for (const auto& o : outcomes) evaluated = evaluated || o.result(target).evaluated;
    if (!evaluated) continue;
    std::vector<std::string> row = {h.model_id, surface_of(target), objective_of(target),
                                    display_name(target), fmt("%.3f", asr_open(outcomes, target))};
    const auto q = mean_queries(outcomes, target);
    row.push_back(q ? fmt("%.1f", *q) : "-");
    const auto d = safety_delta(outcomes, target);
    if (d) {
      row.push_back(fmt2("%.1f (%+.1f)", d->attacked.collision_pct, d->delta.collision_pct));
      row.push_back(fmt2("%.1f (%+.1f)", d->attacked.near_encounter_pct, d->delta.near_encounter_pct));
      row.push_back(fmt2("%.0f (%+.0f)", d->attacked.min_ttc_ms, d->delta.min_ttc_ms));
    } else {
      row.insert(row.end(), {"n/a", "n/a", "n/a"});
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table bootstrap_table(const ReportHeader& h, std::span<const AttackOutcome> outcomes) {
  using detail::fmt;
  Table t;
  t.notes = header_notes(h);
  t.notes.push_back("bootstrap resamples=" + std::to_string(h.bootstrap_resamples) +
                    " seed=" + std::to_string(h.seed) + " percentiles=nearest-rank 2.5/97.5");
  t.columns = {"Target", "ASR", "Mean", "Lo95", "Hi95"};
  if (outcomes.empty()) return t;
  for (AttackTarget target : kAllAttackTargets) {
    bool evaluated = false;
    for (const auto& o : outcomes) evaluated = evaluated || o.result(target).evaluated;
    if (!evaluated) continue;
    const auto b = bootstrap_asr(outcomes, target, h.bootstrap_resamples,
                                 derive_seed(h.seed, index_of(target)));
    t.rows.push_back({display_name(target), fmt("%.3f", asr_open(outcomes, target)),
                      fmt("%.3f", b.mean), fmt("%.3f", b.lo), fmt("%.3f", b.hi)});
  }
  return t;
}

// Model / Traj Dev / Obj / Rel / Impl / Plan / All / Slow / DoS.
inline Table closed_loop_table(const ReportHeader& h, std::span<const ClosedRecord> records) {
  using detail::fmt;
  Table t;
  t.notes = header_notes(h);
  std::size_t errors = 0;
  for (const auto& r : records) errors += r.error ? 1 : 0;
  t.notes.push_back("scenarios=" + std::to_string(records.size()) +
                    " failed=" + std::to_string(errors) + " (failed runs count as non-success)");
  t.columns = {"Model", "Traj Dev", "Obj", "Rel", "Impl", "Plan", "All", "Slow", "DoS"};
  if (records.empty()) return t;
  static constexpr std::array<AttackTarget, 8> kOrder = {
      AttackTarget::Trajectory, AttackTarget::Object,   AttackTarget::Relation,
      AttackTarget::Implication, AttackTarget::Planning, AttackTarget::All,
      AttackTarget::Slowdown,   AttackTarget::Dos};
  std::vector<std::string> row = {h.model_id};
  for (AttackTarget target : kOrder) {
    row.push_back(requested(records, target) ? fmt("%.3f", asr_closed(records, target)) : "-");
  }
  t.rows.push_back(std::move(row));
  return t;
}

// Incident / Avg Second Benign / Avg Second Malicious / Δ over scenarios
// where both twins show the incident.
inline Table incident_timing_table(const ReportHeader& h, std::span<const ClosedRecord> records) {
  using detail::fmt;
  Table t;
  t.notes = header_notes(h);
  t.notes.push_back("timing over scenarios where both twins show the incident; Δ = malicious - benign");
  t.columns = {"Incident", "Avg Second Benign", "Avg Second Malicious", "Δ"};
  std::vector<SafetyMetrics> b;
  std::vector<SafetyMetrics> p;
  for (const auto& r : records) {
    if (r.error) continue;
    b.push_back(r.benign);
    p.push_back(r.perturbed);
  }
  for (const auto& c : compare_incidents(b, p)) {
    if (!c.delta_s) continue;
    t.rows.push_back({std::string(to_string(c.kind)), fmt("%.2f", *c.avg_benign_s),
                      fmt("%.2f", *c.avg_perturbed_s), fmt("%+.2f", *c.delta_s)});
  }
  return t;
}

inline Table incident_count_table(const ReportHeader& h, std::span<const ClosedRecord> records) {
  Table t;
  t.notes = header_notes(h);
  t.columns = {"Incident", "Benign", "Malicious", "New", "Resolved", "Paired"};
  std::vector<SafetyMetrics> b;
  std::vector<SafetyMetrics> p;
  for (const auto& r : records) {
    if (r.error) continue;
    b.push_back(r.benign);
    p.push_back(r.perturbed);
  }
  if (b.empty()) return t;
  for (const auto& c : compare_incidents(b, p)) {
    t.rows.push_back({std::string(to_string(c.kind)), std::to_string(c.benign_count),
                      std::to_string(c.perturbed_count), std::to_string(c.new_incidents),
                      std::to_string(c.resolved), std::to_string(c.paired)});
  }
  return t;
}

// Main table for a record set (open-loop or closed-loop layout).
inline Table render_report(const RecordSet& set) {
  return set.header.mode == CampaignMode::Open ? open_loop_table(set.header, set.open)
                                               : closed_loop_table(set.header, set.closed);
}

}  // namespace vlaprobe
