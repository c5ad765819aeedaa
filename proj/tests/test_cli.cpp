#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "fixtures.hpp"
#include "vlaprobe/corpus.hpp"

using namespace vlaprobe;
namespace fs = std::filesystem;

namespace {

const fs::path kData = VLAPROBE_DATA_DIR;
const std::string kCli = VLAPROBE_CLI;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args, const std::string& stdin_text = "") {
  const auto dir = fixture::temp_dir("cli_io");
  const auto out = dir / "stdout.txt";
  std::string cmd = kCli + " " + args + " > " + out.string() + " 2> " + (dir / "stderr.txt").string();
  if (!stdin_text.empty()) {
    fixture::write_file(dir / "stdin.txt", stdin_text);
    cmd += " < " + (dir / "stdin.txt").string();
  } else {
    cmd += " < /dev/null";
  }
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = fixture::slurp(out);
  return r;
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

fs::path write_config(const std::string& name, const std::string& body) {
  const auto dir = fixture::temp_dir("cli_cfg_" + name);
  fixture::write_file(dir / "config.json", body);
  return dir / "config.json";
}

std::string scenarios_json() {
  return "\"scenarios\": [\"" + (kData / "corpus" / "scn-00[0-3].json").string() + "\"]";
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("corrupt").code, 2);
  EXPECT_EQ(run("corrupt -t 'go' -s 1.5").code, 2);
  EXPECT_EQ(run("corrupt -t 'go' --ops Teleport").code, 2);
  EXPECT_EQ(run("attack-open -c /nonexistent.json").code, 2);
  EXPECT_EQ(run("--version").code, 0);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, CorruptMatchesLibrary) {
  const auto r = run("corrupt -t 'slow down for the lead car' -s 0.5 --seed 11 -n 3");
  ASSERT_EQ(r.code, 0);
  CorruptionSpec spec;
  spec.sigma = 0.5;
  spec.seed = 11;
  std::string want;
  for (const auto& c : corruption_stream("slow down for the lead car", spec, 3)) want += c.text + "\n";
  EXPECT_EQ(r.out, want);
  const auto j = run("corrupt -t 'Go left' -s 1 --ops CaseFlip --json");
  ASSERT_EQ(j.code, 0);
  const auto doc = nlohmann::json::parse(j.out);
  EXPECT_EQ(doc.at("text"), "gO LEFT");
  EXPECT_EQ(doc.at("edits").size(), 2u);
}

TEST(Cli, NormalizeTextAndStdin) {
  const auto vocab = quote(kData / "vocab.txt");
  const auto a = run("normalize -v " + vocab + " -t 'sl0w dwon for teh lead car'");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, "slow down for the lead car\n");
  const auto b = run("normalize -v " + vocab, "STOP!! for the persn\nkeep lnae\n");
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(b.out, "stop for the person\nkeep lane\n");
  EXPECT_EQ(run("normalize -v /nonexistent/vocab.txt -t x").code, 2);
}

TEST(Cli, GenCorpusMatchesLibrary) {
  const auto dir = fixture::temp_dir("cli_gen");
  ASSERT_EQ(run("gen-corpus -o " + quote(dir) + " -n 3 -l 10 --seed 5").code, 0);
  CorpusSpec spec;
  spec.count = 3;
  spec.prompt_length = 10;
  spec.seed = 5;
  EXPECT_EQ(load_scenario_dir(dir / "corpus"), generate_corpus(spec));
  EXPECT_EQ(run("gen-corpus -o " + quote(dir) + " -l 2").code, 2);
}

TEST(Cli, OpenCampaignAndReport) {
  const auto out = fixture::temp_dir("cli_open_out");
  const auto cfg = write_config("open", "{\"config_version\": 1, " + scenarios_json() +
                                            ", \"attack\": {\"n_queries\": 10}, \"seed\": 3}");
  const auto r = run("attack-open -c " + quote(cfg) + " -o " + quote(out) + " -j 2");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("Planning"), std::string::npos);
  ASSERT_TRUE(fs::exists(out / "base" / "records.jsonl"));
  const auto rep = run("report -r " + quote(out / "base" / "records.jsonl") + " -f csv");
  ASSERT_EQ(rep.code, 0);
  EXPECT_EQ(rep.out, fixture::slurp(out / "base" / "table.csv"));
  EXPECT_EQ(run("report -r " + quote(out / "base" / "records.jsonl") + " --table bootstrap").code, 0);
  EXPECT_EQ(run("report -r " + quote(out / "base" / "records.jsonl") + " --table counts").code, 2);
}

TEST(Cli, ClosedCampaign) {
  const auto out = fixture::temp_dir("cli_closed_out");
  const auto cfg = write_config("closed", "{\"config_version\": 1, " + scenarios_json() +
                                              ", \"mode\": \"closed\", \"seed\": 3}");
  const auto r = run("attack-closed -c " + quote(cfg) + " -o " + quote(out));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(out / "base" / "incident_counts.csv"));
  EXPECT_EQ(run("report -r " + quote(out / "base" / "records.jsonl") + " --table incidents").code, 0);
}

TEST(Cli, ConfigErrorsExitTwo) {
  const auto bad_key = write_config("bad_key", "{\"config_version\": 1, " + scenarios_json() +
                                                   ", \"mystery\": 1}");
  EXPECT_EQ(run("attack-open -c " + quote(bad_key)).code, 2);
  const auto bad_json = write_config("bad_json", "{\"config_version\": 1,");
  EXPECT_EQ(run("attack-open -c " + quote(bad_json)).code, 2);
  const auto bad_range = write_config("bad_range", "{\"config_version\": 1, " + scenarios_json() +
                                                       ", \"corruption\": {\"sigma\": -1}}");
  EXPECT_EQ(run("attack-open -c " + quote(bad_range)).code, 2);
  const auto missing = write_config("missing", "{\"config_version\": 1, \"scenarios\": [\"nope/*.json\"]}");
  EXPECT_EQ(run("attack-closed -c " + quote(missing)).code, 2);
  const auto invalid_dir = fixture::temp_dir("cli_invalid_scn");
  fixture::write_file(invalid_dir / "x.json", "{\"id\": \"x\"}");
  const auto invalid = write_config(
      "invalid", "{\"config_version\": 1, \"scenarios\": [\"" + invalid_dir.string() + "\"]}");
  EXPECT_EQ(run("attack-open -c " + quote(invalid)).code, 2);
}

TEST(Cli, EveryScenarioFailingExitsOne) {
  const auto out = fixture::temp_dir("cli_fail_out");
  const auto cfg = write_config(
      "dead", "{\"config_version\": 1, " + scenarios_json() +
                  ", \"model\": {\"kind\": \"http\", \"endpoint\": \"http://127.0.0.1:1\", "
                  "\"timeout_ms\": 500}, \"attack\": {\"n_queries\": 2}}");
  EXPECT_EQ(run("attack-open -c " + quote(cfg) + " -o " + quote(out)).code, 1);
  EXPECT_TRUE(fs::exists(out / "base" / "records.jsonl"));
}

TEST(Cli, ConformanceOverStdio) {
  const auto scn = quote(kData / "corpus" / "scn-000.json");
  const auto dir = fixture::temp_dir("cli_conf");
  const auto script = dir / "serve.sh";
  fixture::write_file(script, "#!/bin/sh\nexec '" + kCli + "' serve --stdio --scenarios " + scn + "\n");
  fs::permissions(script, fs::perms::owner_all);
  const auto r = run("conformance -s " + scn + " --stdio " + quote(script));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 5);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  EXPECT_EQ(run("conformance -s " + scn + " --stdio true --timeout-ms 500").code, 1);
  EXPECT_EQ(run("conformance -s " + scn).code, 2);
}
