// vlaprobe: command-line front end.
// Exit codes: 0 success, 1 campaign-level or runtime failure, 2 config or usage error.

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vlaprobe/vlaprobe.hpp"

namespace {

using namespace vlaprobe;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct CampaignArgs {
  std::string config;
  std::string out;
  std::size_t workers = 0;
  std::string defense;
  std::optional<std::uint64_t> seed;
};

void add_campaign_options(CLI::App* cmd, CampaignArgs& a) {
  cmd->add_option("-c,--config", a.config, "Campaign config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", a.out, "Output directory (overrides output_dir)");
  cmd->add_option("-j,--workers", a.workers, "Worker threads (overrides workers)");
  cmd->add_option("--defense", a.defense, "off | normalize (overrides defense)")
      ->check(CLI::IsMember({"off", "normalize"}));
  cmd->add_option("--seed", a.seed, "Global seed (overrides seed)");
}

int run_campaign_cmd(const CampaignArgs& a, CampaignMode mode) {
  CampaignPlan plan;
  try {
    CampaignConfig cfg = load_campaign_config(a.config, mode);
    if (!a.out.empty()) cfg.output_dir = a.out;
    if (a.workers > 0) cfg.workers = a.workers;
    if (!a.defense.empty()) cfg.defense = a.defense == "normalize";
    if (a.seed) cfg.seed = *a.seed;
    plan = plan_campaign(cfg);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    const CampaignBundle bundle = run_campaign(plan);
    const auto out = plan.config.resolve(plan.config.output_dir);
    write_bundle(bundle, out);
    write_text(std::cout, render_report(bundle.points.front().records));
    std::cout << "bundle: " << out.string() << '\n';
    if (bundle.failed) {
      std::cerr << "campaign failed: every scenario reported an error\n";
      return kExitFailure;
    }
  } catch (const std::exception& e) {
    std::cerr << "campaign failed: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

std::shared_ptr<const Transport> transport_from(const std::string& endpoint,
                                                const std::vector<std::string>& command,
                                                int timeout_ms) {
  if (!endpoint.empty()) return std::make_shared<HttpTransport>(endpoint, timeout_ms);
  return std::make_shared<StdioTransport>(command, timeout_ms);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robustness evaluation harness for reasoning driving policies"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // corrupt
  auto* corrupt = app.add_subcommand("corrupt", "Sample corruptions of a text");
  std::string c_text;
  double c_sigma = 0.4;
  std::uint64_t c_seed = 0;
  std::vector<std::string> c_ops;
  std::size_t c_count = 1;
  bool c_json = false;
  corrupt->add_option("-t,--text", c_text, "Clean text")->required();
  corrupt->add_option("-s,--sigma", c_sigma, "Per-token corruption probability")
      ->check(CLI::Range(0.0, 1.0));
  corrupt->add_option("--seed", c_seed, "Base seed");
  corrupt->add_option("--ops", c_ops, "Operators (default: all)")->delimiter(',');
  corrupt->add_option("-n,--count", c_count, "Stream elements to print");
  corrupt->add_flag("--json", c_json, "One JSON object per line with the edits");

  // normalize
  auto* norm = app.add_subcommand("normalize", "Apply the normalization defense");
  std::string n_vocab;
  std::string n_text;
  std::size_t n_dist = Vocabulary::kDefaultMaxDistance;
  norm->add_option("-v,--vocab", n_vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  norm->add_option("-t,--text", n_text, "Text (default: read lines from stdin)");
  norm->add_option("--max-distance", n_dist, "Correction radius");

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "Generate the synthetic scenario corpus");
  std::string g_out;
  CorpusSpec g_spec;
  gen->add_option("-o,--out", g_out, "Output directory")->required();
  gen->add_option("-n,--count", g_spec.count, "Number of scenarios");
  gen->add_option("-l,--length", g_spec.prompt_length, "Prompt length in tokens");
  gen->add_option("--seed", g_spec.seed, "Corpus seed");

  // attack-open / attack-closed
  CampaignArgs open_args;
  CampaignArgs closed_args;
  auto* aopen = app.add_subcommand("attack-open", "Open-loop Best-of-N campaign");
  add_campaign_options(aopen, open_args);
  auto* aclosed = app.add_subcommand("attack-closed", "Closed-loop single-query campaign");
  add_campaign_options(aclosed, closed_args);

  // conformance
  auto* conf = app.add_subcommand("conformance", "Run the protocol conformance battery");
  std::string cf_endpoint;
  std::vector<std::string> cf_command;
  std::string cf_scenario;
  int cf_timeout = 30000;
  auto* ep = conf->add_option("-e,--endpoint", cf_endpoint, "HTTP endpoint, e.g. http://127.0.0.1:8080");
  auto* cmd = conf->add_option("--stdio", cf_command, "Command speaking the line-delimited protocol");
  ep->excludes(cmd);
  conf->add_option("-s,--scenario", cf_scenario, "Scenario used for scene_ref and ego state")
      ->required()
      ->check(CLI::ExistingFile);
  conf->add_option("--timeout-ms", cf_timeout, "Per-call timeout");

  // report
  auto* rep = app.add_subcommand("report", "Render tables from a records file");
  std::string r_records;
  std::string r_format = "text";
  std::string r_table = "main";
  rep->add_option("-r,--records", r_records, "records.jsonl")->required()->check(CLI::ExistingFile);
  rep->add_option("-f,--format", r_format, "text | csv")->check(CLI::IsMember({"text", "csv"}));
  rep->add_option("--table", r_table, "main | bootstrap | incidents | counts")
      ->check(CLI::IsMember({"main", "bootstrap", "incidents", "counts"}));

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the mock model over protocol v1");
  std::vector<std::string> s_scenarios;
  std::string s_host = "127.0.0.1";
  int s_port = 8080;
  bool s_stdio = false;
  serve->add_option("--scenarios", s_scenarios, "Scenario files, directories or globs")->required();
  serve->add_option("--host", s_host, "Bind address");
  serve->add_option("-p,--port", s_port, "Port (0 = any)");
  serve->add_flag("--stdio", s_stdio, "Line-delimited JSON on stdin/stdout instead of HTTP");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*corrupt) {
      CorruptionSpec spec;
      spec.sigma = c_sigma;
      spec.seed = c_seed;
      if (!c_ops.empty()) {
        OperatorSet ops;
        for (const auto& name : c_ops) {
          const auto op = corruption_op_from_string(name);
          if (!op) throw ParseError("unknown operator '" + name + "'");
          ops.insert(*op);
        }
        spec.operators = ops;
      }
      for (const auto& c : corruption_stream(c_text, spec, c_count)) {
        if (c_json) {
          nlohmann::json edits = nlohmann::json::array();
          for (const auto& e : c.edits) {
            edits.push_back({{"token", e.token_index}, {"op", std::string(to_string(e.op))}});
          }
          std::cout << nlohmann::json{{"text", c.text}, {"edits", edits}}.dump() << '\n';
        } else {
          std::cout << c.text << '\n';
        }
      }
      return kExitOk;
    }
    if (*norm) {
      const Vocabulary vocab = Vocabulary::load(n_vocab, n_dist);
      if (!n_text.empty()) {
        std::cout << normalize(n_text, vocab) << '\n';
      } else {
        std::string line;
        while (std::getline(std::cin, line)) std::cout << normalize(line, vocab) << '\n';
      }
      return kExitOk;
    }
    if (*gen) {
      const auto corpus = generate_corpus(g_spec);
      write_corpus(g_out, corpus);
      std::cout << "wrote " << corpus.size() << " scenarios to " << g_out << '\n';
      return kExitOk;
    }
    if (*aopen) return run_campaign_cmd(open_args, CampaignMode::Open);
    if (*aclosed) return run_campaign_cmd(closed_args, CampaignMode::Closed);
    if (*conf) {
      if (cf_endpoint.empty() && cf_command.empty()) {
        std::cerr << "conformance: give --endpoint or --stdio\n";
        return kExitConfig;
      }
      const Scenario scene = load_scenario(cf_scenario);
      const auto transport = transport_from(cf_endpoint, cf_command, cf_timeout);
      const ConformanceReport report = conformance_check(*transport, scene);
      for (const auto& c : report.cases) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
      }
      return report.all_passed() ? kExitOk : kExitFailure;
    }
    if (*rep) {
      std::ifstream in(r_records);
      const RecordSet set = read_records(in);
      Table t;
      if (r_table == "main") {
        t = render_report(set);
      } else if (r_table == "bootstrap") {
        if (set.header.mode != CampaignMode::Open) throw ParseError("bootstrap table needs open-loop records");
        t = bootstrap_table(set.header, set.open);
      } else {
        if (set.header.mode != CampaignMode::Closed) throw ParseError("incident tables need closed-loop records");
        t = r_table == "incidents" ? incident_timing_table(set.header, set.closed)
                                   : incident_count_table(set.header, set.closed);
      }
      if (r_format == "csv") {
        write_csv(std::cout, t);
      } else {
        write_text(std::cout, t);
      }
      return kExitOk;
    }
    if (*serve) {
      std::vector<Scenario> scenarios;
      for (auto& ls : load_scenarios(s_scenarios, ".")) scenarios.push_back(std::move(ls.scenario));
      const ServerHandlers h = model_handlers(std::make_shared<MockModel>(scenarios),
                                              std::make_shared<BuiltinEvaluator>());
      if (s_stdio) {
        serve_stdio(h, std::cin, std::cout);
        return kExitOk;
      }
      ProtocolServer server(h, s_host, s_port);
      std::cout << "listening on " << server.endpoint() << std::endl;
      server.wait();
      return kExitOk;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
