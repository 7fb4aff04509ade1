#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <regex>
#include <sstream>

#include "../support/temp_dir.hpp"
#include "cli.hpp"
#include "w2w/errors.hpp"
#include "w2w/text.hpp"

using namespace w2w;
using namespace w2w::cli;
using w2w::testing::TempDir;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = W2W_FIXTURE_DIR;

struct CliResult {
  int code;
  std::string out, err;
};

CliResult invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "w2w");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path().string());
  }
  return out;
}

}  // namespace

TEST_CASE("sweep points and ranges") {
  const auto p = parse_sweep_point("4-5, 8, 15");
  CHECK(p.paragraphs_min == 4);
  CHECK(p.paragraphs_max == 5);
  CHECK(p.objectives == 8);
  CHECK(p.important_cap == 15);
  CHECK(sweep_label(p) == "p4-5_o8_c15");
  CHECK(sweep_label(parse_sweep_point("3,6,10")) == "p3_o6_c10");
  CHECK_THROWS(parse_sweep_point("3,6"));
  CHECK_THROWS(parse_sweep_point("0,6,10"));
  CHECK_THROWS(parse_sweep_point("a,6,10"));
}

TEST_CASE("mean and std formatting") {
  CHECK(format_mean_std(0.34214, 0.3712) == "0.3421 ± 0.37");
  CHECK(format_mean_std(1.0, 0.0) == "1.0000 ± 0.00");
  CHECK(format_mean_std(-0.5, 0.25) == "-0.5000 ± 0.25");
}

TEST_CASE("summaries count predicates and use the population std") {
  std::vector<RunOutcome> runs(4);
  const double rewards[] = {1.0, 0.5, 0.0, -0.5};
  for (int i = 0; i < 4; ++i) {
    EvaluationReport e;
    e.playable = i < 3;
    e.is_novel = i != 1;
    e.novel_and_playable = e.playable && e.is_novel;
    e.coherence = 60 + 10 * i;
    e.agent_reward = rewards[i];
    runs[static_cast<std::size_t>(i)].completed = i != 3;
    runs[static_cast<std::size_t>(i)].final_evaluation = e;
  }
  runs.push_back(RunOutcome{"dead", false, std::nullopt, "boom"});
  const auto row = summarize({}, runs, 70);
  CHECK(row.runs == 5);
  CHECK(row.playability == 3);
  CHECK(row.novelty == 3);
  CHECK(row.novel_and_playable == 2);
  CHECK(row.completion == 3);
  CHECK(row.coherence_at_threshold == 3);
  CHECK(*row.coherence_mean == doctest::Approx(75.0));
  CHECK(*row.reward_mean == doctest::Approx(0.25));
  // population: sqrt(mean of squared deviations) = sqrt(0.3125)
  CHECK(*row.reward_std == doctest::Approx(std::sqrt(0.3125)));
}

TEST_CASE("config file overlays defaults; flags overlay the file") {
  TempDir tmp;
  write_file(tmp.file("c.toml"),
             "rounds = 2\nobjective_count = 5\nstory_paragraphs = \"3-4\"\nseed = 9\n"
             "[provider]\nkind = \"mock\"\nscript = \"s.json\"\n"
             "[tilesets]\nenvironment = \"tiles/env.csv\"\n"
             "[batch]\nruns = 4\nsweep = [\"4,8,15\", \"2,4,6\"]\n");
  const auto c = load_config_file(tmp.file("c.toml"), default_config());
  CHECK(c.run.rounds == 2);
  CHECK(c.run.objective_count == 5);
  CHECK(c.run.story_paragraphs_min == 3);
  CHECK(c.run.story_paragraphs_max == 4);
  CHECK(c.run.seed == 9);
  CHECK(c.run.important_tile_cap == 15);
  CHECK(c.run.script_path == (tmp.path() / "s.json").string());
  CHECK(c.run.env_tileset == (tmp.path() / "tiles/env.csv").string());
  CHECK(c.batch_runs == 4);
  CHECK(c.sweep.size() == 2);

  write_file(tmp.file("bad.toml"), "roundz = 2\n");
  CHECK_THROWS_AS(load_config_file(tmp.file("bad.toml"), default_config()), PreconditionError);
  write_file(tmp.file("broken.toml"), "rounds = = 2\n");
  CHECK_THROWS_AS(load_config_file(tmp.file("broken.toml"), default_config()), ParseFailure);

  write_file(tmp.file("d.toml"), "rounds = 2\nobjective_count = 5\n[provider]\nkind = \"mock\"\nscript = \"" +
                                     kFixtures + "/demo_script.json\"\n");
  const auto r = invoke({"generate", "--config", tmp.file("d.toml"), "--rounds", "1", "--out",
                      (tmp.path() / "runs").string(), "--run-id", "prec"});
  const auto echo = Json::parse(read_file((tmp.path() / "runs/prec/config.json").string()));
  CHECK(echo.at("rounds") == 1);            // flag
  CHECK(echo.at("objective_count") == 5);   // file
  CHECK(echo.at("important_tile_cap") == 15);  // default
}

TEST_CASE("generate: demo config, exhaustion and a missing tileset") {
  TempDir tmp;
  const auto out = (tmp.path() / "runs").string();
  auto r = invoke({"generate", "--config", kFixtures + "/demo.toml", "--out", out, "--run-id", "demo"});
  CHECK(r.code == 0);
  CHECK(r.out.find("completed") != std::string::npos);
  CHECK(fs::exists(tmp.path() / "runs/demo/world.png"));

  // The script only covers extraction; the world stage runs dry.
  auto script = load_script_file(kFixtures + "/demo_script.json");
  script.erase(std::remove_if(script.begin(), script.end(),
                              [](const ScriptEntry& e) { return e.first == ExtractionStep::WorldEnvironment; }),
               script.end());
  write_file(tmp.file("short.json"), script_to_json(script));
  r = invoke({"generate", "--provider", "mock", "--script", tmp.file("short.json"), "--out", out, "--run-id", "short"});
  CHECK(r.code == 2);
  CHECK(fs::exists(tmp.path() / "runs/short/extractions.json"));
  CHECK(fs::exists(tmp.path() / "runs/short/summary.json"));

  r = invoke({"generate", "--script", kFixtures + "/demo_script.json", "--env-tileset", tmp.file("missing.csv"),
           "--out", out});
  CHECK(r.code == 1);
  CHECK(r.err.find("DatasetError") != std::string::npos);

  r = invoke({"generate", "--mode", "sideways"});
  CHECK(r.code == 1);
  r = invoke({"generate", "--rounds", "0", "--script", kFixtures + "/demo_script.json"});
  CHECK(r.code == 1);
}

TEST_CASE("evaluate: fixture world, malformed legend, no judge") {
  TempDir tmp;
  auto r = invoke({"evaluate", kFixtures + "/demo_world.txt", kFixtures + "/demo_extractions.json", "--no-llm"});
  REQUIRE(r.code == 0);
  const auto j = Json::parse(r.out);
  CHECK(j.at("playable") == true);
  CHECK_FALSE(j.contains("coherence"));
  CHECK(j.at("char_tile_accuracy") == 1.0);

  write_file(tmp.file("bad.json"), "{\"legend\": [1, 2");
  r = invoke({"evaluate", kFixtures + "/demo_world.txt", tmp.file("bad.json")});
  CHECK(r.code == 1);
  write_file(tmp.file("bad2.json"), "{\"legend\": {\"entries\": 3}}");
  r = invoke({"evaluate", kFixtures + "/demo_world.txt", tmp.file("bad2.json")});
  CHECK(r.code == 1);

  // A mock provider never judges.
  r = invoke({"evaluate", kFixtures + "/demo_world.txt", kFixtures + "/demo_extractions.json"});
  CHECK(r.code == 0);
  CHECK_FALSE(Json::parse(r.out).contains("coherence"));
}

TEST_CASE("render: dimensions, determinism, unknown symbols") {
  TempDir tmp;
  write_file(tmp.file("w.txt"),
             "##########\n#@..~~..S#\n#.k.~~...#\n#...==...#\n#.c.~~.g.#\n#...~~...#\n#..D~~.f.#\n##########\n");
  auto r = invoke({"render", tmp.file("w.txt"), kFixtures + "/demo_extractions.json", tmp.file("a.png")});
  REQUIRE(r.code == 0);
  const auto img = read_png(tmp.file("a.png"));
  CHECK(img.width() == 160);
  CHECK(img.height() == 128);
  r = invoke({"render", tmp.file("w.txt"), kFixtures + "/demo_extractions.json", tmp.file("b.png")});
  CHECK(read_file(tmp.file("a.png")) == read_file(tmp.file("b.png")));

  write_file(tmp.file("x.txt"), "###\n#Q#\n###\n");
  r = invoke({"render", tmp.file("x.txt"), kFixtures + "/demo_extractions.json", tmp.file("c.png")});
  CHECK(r.code == 1);
  CHECK(r.err.find("MissingAssignment") != std::string::npos);
}

TEST_CASE("make-tileset reproduces the shipped placeholder set") {
  TempDir tmp;
  const auto r = invoke({"make-tileset", "--out", tmp.path().string()});
  REQUIRE(r.code == 0);
  const auto fresh = read_tree(tmp.path());
  auto shipped = read_tree(fs::path(W2W_ASSET_DIR) / "placeholder");
  shipped.erase("spec.json");
  CHECK(fresh.size() == 46);
  CHECK(fresh == shipped);
}

TEST_CASE("agent-run plays the fixture world") {
  TempDir tmp;
  const auto r = invoke({"agent-run", kFixtures + "/demo_world.txt", kFixtures + "/demo_extractions.json", "--script",
                      kFixtures + "/demo_agent_script.json", "--episodes", "1", "--traces", tmp.file("t.json")});
  REQUIRE(r.code == 0);
  CHECK(r.out == "episode 0: reward 1.0000\n");
  const auto j = Json::parse(read_file(tmp.file("t.json")));
  CHECK(j.at("rewards") == Json::array({1.0}));
}

TEST_CASE("batch: counts match a recount of the per-run summaries") {
  TempDir tmp;
  const auto out = (tmp.path() / "batch").string();
  const auto r = invoke({"batch", "--script", kFixtures + "/demo_script.json", "--runs", "10", "--workers", "4",
                      "--out", out});
  REQUIRE(r.code == 0);
  const auto report = Json::parse(read_file(out + "/batch_report.json"));
  REQUIRE(report.at("rows").size() == 1);
  const auto& row = report.at("rows")[0];
  CHECK(row.at("runs") == 10);

  int novelty = 0, playable = 0, both = 0, completed = 0, dirs = 0;
  std::vector<double> rewards;
  for (const auto& d : row.at("run_dirs")) {
    const auto s = Json::parse(read_file(d.get<std::string>() + "/summary.json"));
    ++dirs;
    if (s.at("completed").get<bool>()) ++completed;
    const auto& e = s.at("final_evaluation");
    novelty += e.at("is_novel").get<bool>();
    playable += e.at("playable").get<bool>();
    both += e.at("novel_and_playable").get<bool>();
    rewards.push_back(e.at("agent_reward").get<double>());
  }
  CHECK(dirs == 10);
  CHECK(row.at("counts").at("novelty") == novelty);
  CHECK(row.at("counts").at("playability") == playable);
  CHECK(row.at("counts").at("novel_and_playable") == both);
  CHECK(row.at("counts").at("completion") == completed);
  CHECK(completed == 10);
  CHECK(std::regex_match(row.at("agent_reward").at("formatted").get<std::string>(),
                         std::regex(R"(-?\d+\.\d{4} ± \d+\.\d{2})")));
  CHECK(read_file(out + "/batch_report.txt").find("1.0000 ± 0.00") != std::string::npos);
}

TEST_CASE("batch sweep writes one row per point") {
  TempDir tmp;
  const auto out = (tmp.path() / "sweep").string();
  const auto r = invoke({"batch", "--script", kFixtures + "/demo_script.json", "--runs", "2", "--sweep",
                      "4-5,8,15;3,8,10", "--sweep", "2,8,6", "--out", out, "--rounds", "1", "--episodes", "1"});
  REQUIRE(r.code == 0);
  const auto report = Json::parse(read_file(out + "/batch_report.json"));
  CHECK(report.at("rows").size() == 3);
  int run_dirs = 0;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (e.is_directory() && e.path().filename().string().rfind("run_", 0) == 0) ++run_dirs;
  }
  CHECK(run_dirs == 6);
  CHECK(fs::exists(fs::path(out) / "p3_o8_c10/run_01/summary.json"));
}
