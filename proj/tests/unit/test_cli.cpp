// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sentirisk/cli.hpp"
#include "sentirisk/config.hpp"
#include "sentirisk/dataset.hpp"
#include "sentirisk/errors.hpp"

using namespace sentirisk;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::StartsWith;

namespace {

const fs::path kFixtures = SENTIRISK_FIXTURE_DIR;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

/// Fresh scratch directory holding a prepared copy of the fixture data.
struct Workspace {
  fs::path root;
  fs::path prepared;
  std::string config = (kFixtures / "cli_config.json").string();

  Workspace() : root(fs::temp_directory_path() / "sentirisk_cli_test"), prepared(root / "prepared") {
    fs::remove_all(root);
    fs::create_directories(root);
    const Run r = cli({"--config", config, "--data-dir", (kFixtures / "data").string(), "prepare", "--out",
                       prepared.string()});
    REQUIRE(r.code == 0);
  }
  ~Workspace() { fs::remove_all(root); }

  std::string path(const std::string& name) const { return (root / name).string(); }
};

}  // namespace

TEST_CASE("prepare writes exactly the windows make_windows produces") {
  const Workspace ws;
  const auto bars = read_market_csv(kFixtures / "data" / "market.csv");
  const std::size_t expected = make_windows(align_days(bars, {}).days, 20).size();
  CHECK(expected == 40);
  CHECK(lines_of(slurp(ws.prepared / "samples.jsonl")).size() == expected);
  CHECK(fs::exists(ws.prepared / "vocab.txt"));
  CHECK(fs::exists(ws.prepared / "norm_stats.json"));

  const Run again = cli({"--config", ws.config, "--data-dir", (kFixtures / "data").string(), "prepare", "--out",
                         ws.path("prepared2")});
  CHECK_THAT(again.out, StartsWith("windows 40 train 28 val 6 test 6"));
  CHECK_THAT(again.out, ContainsSubstring("dropped_docs 1"));
  CHECK(slurp(ws.prepared / "samples.jsonl") == slurp(ws.root / "prepared2" / "samples.jsonl"));
}

TEST_CASE("train is reproducible and downstream commands run") {
  const Workspace ws;
  const std::vector<std::string> base = {"--config", ws.config, "--data-dir", ws.prepared.string()};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return cli(args);
  };

  const Run a = with({"--model-out", ws.path("a.json"), "train", "--history", ws.path("a.jsonl")});
  const Run b = with({"--model-out", ws.path("b.json"), "train", "--history", ws.path("b.jsonl")});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK_THAT(a.err, ContainsSubstring("epoch 1"));
  CHECK(slurp(ws.root / "a.json") == slurp(ws.root / "b.json"));
  CHECK(slurp(ws.root / "a.jsonl") == slurp(ws.root / "b.jsonl"));
  CHECK(lines_of(slurp(ws.root / "a.jsonl")).size() == 3);

  const Run other = with({"--seed", "4", "--model-out", ws.path("c.json"), "train"});
  REQUIRE(other.code == 0);
  CHECK(slurp(ws.root / "a.json") != slurp(ws.root / "c.json"));

  const Run eval = with({"--model-in", ws.path("a.json"), "evaluate", "--split", "val", "--report", ws.path("r.json")});
  REQUIRE(eval.code == 0);
  CHECK_THAT(eval.out, StartsWith("Model\tAc\tRec\tF1\nCNN+GRU\t"));
  const auto report = nlohmann::json::parse(slurp(ws.root / "r.json"));
  CHECK(report.at("samples").get<std::size_t>() == 6);

  const Run pred = with({"--model-in", ws.path("a.json"), "predict", "--out", ws.path("p.csv"), "--daily",
                         ws.path("d.jsonl")});
  REQUIRE(pred.code == 0);
  const auto rows = lines_of(slurp(ws.root / "p.csv"));
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == "date,true_close,pred_close");
  CHECK(lines_of(slurp(ws.root / "d.jsonl")).size() == 6);

  const Run al1 = with({"--model-in", ws.path("a.json"), "alert", "--out", ws.path("al1.jsonl")});
  const Run al2 = with({"--model-in", ws.path("a.json"), "alert", "--out", ws.path("al2.jsonl")});
  REQUIRE(al1.code == 0);
  CHECK(slurp(ws.root / "al1.jsonl") == slurp(ws.root / "al2.jsonl"));
  const Run al3 = with({"alert", "--predictions", ws.path("d.jsonl"), "--out", ws.path("al3.jsonl")});
  REQUIRE(al3.code == 0);
  CHECK(slurp(ws.root / "al1.jsonl") == slurp(ws.root / "al3.jsonl"));

  const Run cmp = with({"compare", "--report", ws.path("cmp.json")});
  REQUIRE(cmp.code == 0);
  const auto table = lines_of(cmp.out);
  REQUIRE(table.size() == 4);
  CHECK_THAT(table[1], StartsWith("CNN\t"));
  CHECK_THAT(table[2], StartsWith("GRU\t"));
  CHECK_THAT(table[3], StartsWith("CNN+GRU\t"));
  const auto cmp_json = nlohmann::json::parse(slurp(ws.root / "cmp.json"));
  CHECK(cmp_json.contains("cnn"));
  CHECK(cmp_json.at("cnn-gru").contains("train"));

  // A checkpoint from different data shapes is refused.
  const Run gru = with({"--arch", "gru", "--attention", "off", "--model-out", ws.path("g.json"), "train"});
  REQUIRE(gru.code == 0);
  CHECK(with({"--model-in", ws.path("g.json"), "evaluate"}).code == 0);
}

TEST_CASE("alert on a prediction file") {
  const Run r = cli({"alert", "--predictions", (kFixtures / "alert_single_flip.jsonl").string()});
  REQUIRE(r.code == 0);
  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() == 1);
  const auto j = nlohmann::json::parse(lines[0]);
  CHECK(j.at("kind") == "bearish_flip");
  CHECK(j.at("date") == "2024-05-03");

  const Run full = cli({"alert", "--predictions", (kFixtures / "alert_predictions.jsonl").string()});
  CHECK(lines_of(full.out).size() == 6);
  const Run strict = cli({"alert", "--threshold", "0.99", "--predictions", (kFixtures / "alert_predictions.jsonl").string()});
  CHECK(lines_of(strict.out).size() == 3);
  CHECK(cli({"alert", "--threshold", "1.5", "--predictions", (kFixtures / "alert_predictions.jsonl").string()}).code == 2);
}

TEST_CASE("exit codes") {
  const Run help = cli({"--help"});
  CHECK(help.code == 0);
  CHECK_THAT(help.out, ContainsSubstring("prepare"));

  const Run unknown = cli({"--no-such-flag", "train"});
  CHECK(unknown.code == 1);
  CHECK_THAT(unknown.err, ContainsSubstring("error"));
  CHECK_THAT(unknown.err, ContainsSubstring("Usage"));
  CHECK(cli({}).code == 1);
  CHECK(cli({"--arch", "lstm", "train"}).code == 1);
  CHECK(cli({"predict", "--data-dir", "x"}).code == 1);  // --out is required
  CHECK(cli({"train"}).code == 1);                        // no --data-dir

  const fs::path root = fs::temp_directory_path() / "sentirisk_cli_codes";
  fs::remove_all(root);
  fs::create_directories(root);
  CHECK(cli({"--data-dir", root.string(), "prepare"}).code == 2);  // nothing to read
  CHECK(cli({"--data-dir", (root / "missing").string(), "evaluate", "--model-in", "m.json"}).code == 2);

  {
    std::ofstream(root / "bad.json") << R"({"epochs": 3, "learning_rate": 0.1})";
  }
  const Run bad_key = cli({"--config", (root / "bad.json").string(), "alert", "--predictions",
                           (kFixtures / "alert_single_flip.jsonl").string()});
  CHECK(bad_key.code == 2);
  CHECK_THAT(bad_key.err, ContainsSubstring("learning_rate"));

  {
    std::ofstream(root / "unsorted.jsonl")
        << R"({"date":"2024-01-03","predicted_class":"neutral","probs":[0.2,0.6,0.2],"predicted_return":0})" << '\n'
        << R"({"date":"2024-01-02","predicted_class":"neutral","probs":[0.2,0.6,0.2],"predicted_return":0})" << '\n';
  }
  CHECK(cli({"alert", "--predictions", (root / "unsorted.jsonl").string()}).code == 2);

  // A wildly large step drives the weights to overflow.
  const Workspace ws;
  auto cfg = nlohmann::json::parse(slurp(kFixtures / "cli_config.json"));
  cfg["lr"] = 1e300;
  cfg["optimizer"] = "sgd";
  {
    std::ofstream(root / "explode.json") << cfg.dump();
  }
  const Run boom = cli({"--config", (root / "explode.json").string(), "--data-dir", ws.prepared.string(),
                        "--model-out", (root / "x.json").string(), "train"});
  CHECK(boom.code == 3);
  CHECK_THAT(boom.err, ContainsSubstring("non-finite"));
  fs::remove_all(root);
}

TEST_CASE("config file and seed resolution") {
  const RunConfig cfg = load_run_config(kFixtures / "cli_config.json");
  CHECK(cfg.model.embed_dim == 8);
  CHECK(cfg.train.epochs == 3);
  CHECK(cfg.model.seed == 3);
  CHECK(cfg.train.seed == 3);
  CHECK(cfg.prepare.max_doc_len == 8);
  CHECK(run_config_from_json(run_config_to_json(cfg)).model == cfg.model);
  CHECK_THROWS_AS(run_config_from_json(R"({"colour": 1})"), DataError);
  CHECK_THROWS_AS(run_config_from_json(R"({"attention": "maybe"})"), DataError);
  CHECK_THROWS_AS(run_config_from_json(R"({"batch_size": 0})"), DataError);

  ::unsetenv("SENTI_RISK_SEED");
  CHECK_FALSE(resolve_seed(std::nullopt).has_value());
  ::setenv("SENTI_RISK_SEED", "77", 1);
  CHECK(resolve_seed(std::nullopt) == 77u);
  CHECK(resolve_seed(5) == 5u);
  ::setenv("SENTI_RISK_SEED", "seven", 1);
  CHECK_THROWS_AS(resolve_seed(std::nullopt), DataError);
  ::unsetenv("SENTI_RISK_SEED");
}
