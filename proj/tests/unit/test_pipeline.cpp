#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "../support/demo_script.hpp"
#include "../support/temp_dir.hpp"
#include "w2w/errors.hpp"
#include "w2w/pipeline.hpp"
#include "w2w/text.hpp"

using namespace w2w;
using w2w::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Tilesets {
  TempDir dir;
  std::string env, chars;
  Tilesets() {
    write_placeholder_assets(load_placeholder_spec(std::string(W2W_ASSET_DIR) + "/placeholder/spec.json"),
                             dir.path().string());
    env = (dir.path() / "environment.csv").string();
    chars = (dir.path() / "characters.csv").string();
  }
};

Tilesets& tilesets() {
  static Tilesets t;
  return t;
}

RunConfig demo_config(const fs::path& out, std::vector<ScriptEntry> script, RunMode mode = RunMode::Full,
                      int rounds = 3) {
  RunConfig c;
  c.mode = mode;
  c.rounds = rounds;
  c.provider = mock_script(std::move(script));
  c.env_tileset = tilesets().env;
  c.char_tileset = tilesets().chars;
  c.template_dir = W2W_TEMPLATE_DIR;
  c.output_root = out.string();
  c.seed = 7;
  return c;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path().string());
  }
  return out;
}

std::set<ExtractionStep> generation_kinds(const MockProvider& mock) {
  std::set<ExtractionStep> out;
  for (const auto& r : mock.recorded()) {
    if (is_generation_step(r.step)) out.insert(r.step);
  }
  return out;
}

}  // namespace

TEST_CASE("mode names round-trip and reject unknown spellings") {
  for (RunMode m : {RunMode::Full, RunMode::DirectGeneration, RunMode::NoGoals, RunMode::NoImportantTiles,
                    RunMode::OneStep, RunMode::OneRound}) {
    CHECK(parse_mode(mode_name(m)) == m);
  }
  CHECK(parse_mode("ONE_ROUND") == RunMode::OneRound);
  CHECK_THROWS_AS(parse_mode("twice"), PreconditionError);
}

TEST_CASE("config validation") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  c.rounds = 0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c.rounds = 3;
  c.completion_try_budget = 0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c.completion_try_budget = 10;
  c.story_paragraphs_min = 6;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
}

TEST_CASE("config echo carries no secrets or output root") {
  RunConfig c;
  c.output_root = "/somewhere/private";
  c.mode = RunMode::OneRound;
  const auto j = config_to_json(c);
  CHECK(j.at("rounds") == 1);
  CHECK(j.at("mode") == "one-round");
  CHECK(j.dump().find("/somewhere/private") == std::string::npos);
  CHECK_FALSE(j.at("provider").contains("api_key"));
}

TEST_CASE("step plans per mode") {
  using S = ExtractionStep;
  RunConfig c;
  CHECK(apply_mode(c).generation_steps() ==
        std::vector<S>{S::Story, S::Characters, S::Tileset, S::Goals, S::ImportantTiles, S::WalkableTiles,
                       S::ObjectTiles, S::WorldEnvironment, S::WorldFull});
  c.mode = RunMode::DirectGeneration;
  CHECK(apply_mode(c).generation_steps() == std::vector<S>{S::Story, S::WorldFull});
  CHECK(apply_mode(c).world_template == "world_direct");
  c.mode = RunMode::NoGoals;
  auto steps = apply_mode(c).generation_steps();
  CHECK(std::count(steps.begin(), steps.end(), S::Goals) == 0);
  CHECK(steps.size() == 8);
  c.mode = RunMode::NoImportantTiles;
  steps = apply_mode(c).generation_steps();
  CHECK(steps == std::vector<S>{S::Story, S::Characters, S::Tileset, S::Goals, S::WorldEnvironment, S::WorldFull});
  c.mode = RunMode::OneStep;
  steps = apply_mode(c).generation_steps();
  CHECK(std::count(steps.begin(), steps.end(), S::WorldEnvironment) == 0);
  CHECK(apply_mode(c).world_template == "world_full_one_step");
  c.mode = RunMode::OneRound;
  c.rounds = 5;
  CHECK(apply_mode(c).rounds == 1);
  c.mode = RunMode::Full;
  CHECK(apply_mode(c).rounds == 5);
}

TEST_CASE("goal positions: accepted, corrected, unplaceable") {
  const auto world = WorldGrid::from_text("#####\n#...#\n#.k.#\n#.@.#\n#...#\n#..D#");
  std::vector<Goal> goals(2);
  goals[0].index = 0;
  goals[0].target_symbol = 'k';
  goals[0].target_kind = GoalKind::PickObject;
  goals[1].index = 1;
  goals[1].target_symbol = 'D';
  goals[1].target_kind = GoalKind::ReachTile;

  Warnings w;
  auto out = resolve_goal_positions(world, goals, {{0, Cell{2, 2}}, {1, Cell{5, 3}}}, w);
  CHECK(out[0].position == Cell{2, 2});
  CHECK(out[1].position == Cell{5, 3});
  CHECK(w.empty());

  out = resolve_goal_positions(world, goals, {{0, Cell{0, 0}}, {1, Cell{5, 3}}}, w);
  CHECK(out[0].position == Cell{2, 2});
  REQUIRE(w.size() == 1);
  CHECK(w[0].find("objective 0") != std::string::npos);

  w.clear();
  out = resolve_goal_positions(world, goals, {{1, Cell{40, 40}}}, w);
  CHECK(out[0].position == Cell{2, 2});
  CHECK(out[1].position == Cell{5, 3});
  CHECK(w.size() == 2);

  goals[1].target_symbol = 'Z';
  CHECK_THROWS_AS(resolve_goal_positions(world, goals, {}, w), GoalUnplaceable);
}

TEST_CASE("goal positions through a scripted model") {
  const auto world = WorldGrid::from_text("#####\n#.k.#\n#.@D#");
  std::vector<Goal> goals(1);
  goals[0].target_symbol = 'D';
  TileLegend legend;
  legend.entries = {{'#', "wall"}, {'.', "grass"}, {'k', "key"}, {'D', "door"}, {'@', "hero"}};
  LlmSession session(mock_script({{ExtractionStep::GoalPositions,
                                   "```json\n{\"positions\": [{\"index\": 0, \"row\": 2, \"col\": 3}]}\n```"}}),
                     TemplateStore(W2W_TEMPLATE_DIR), logical_clock());
  Warnings w;
  const auto out = extract_goal_positions(world, goals, legend, session, w);
  CHECK(out[0].position == Cell{2, 3});
  CHECK(w.empty());
}

TEST_CASE("full run with one round") {
  TempDir out;
  auto c = demo_config(out.path(), demo::full_mode_script(1), RunMode::Full, 1);
  const auto a = run(c);
  CHECK(a.completed);
  CHECK(a.tries_used == 1);
  CHECK(a.failures.empty());
  REQUIRE(a.round_records.size() == 1);
  CHECK(a.final_world == a.round_records[0].world_grid);
  CHECK(a.round_records[0].evaluation.playable);
  CHECK(a.round_records[0].evaluation.coherence == 70);
  CHECK(a.story_package.paragraph_count == 4);
  CHECK(a.story_package.goals.size() == 8);
  const fs::path dir = a.run_dir;
  for (const char* f : {"config.json", "story.txt", "extractions.json", "round_0/world_env.txt", "round_0/world.txt",
                        "round_0/evals.json", "tile_assignment.json", "world.png", "transcript.jsonl",
                        "agent_traces.json", "summary.json"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  const auto png = read_png((dir / "world.png").string());
  CHECK(png.width() == 12 * kPlaceholderTileSize);
  CHECK(png.height() == 8 * kPlaceholderTileSize);
}

TEST_CASE("scripted agent completes every objective of the demo world") {
  TempDir out;
  const auto a = run(demo_config(out.path(), demo::full_mode_script(3, 2)));
  REQUIRE(a.completed);
  REQUIRE(a.agent_traces.size() == 2);
  for (const auto& t : a.agent_traces) {
    CHECK(t.episode_reward == 1.0);
    CHECK(t.per_objective.size() == 8);
  }
  CHECK(a.round_records.back().evaluation.agent_reward == 1.0);
}

TEST_CASE("full run: rounds, repaired worlds and the feedback in later prompts") {
  TempDir out;
  auto c = demo_config(out.path(), demo::full_mode_script(3));
  const auto mock = c.provider.mock;
  const auto a = run(c);
  REQUIRE(a.completed);
  REQUIRE(a.round_records.size() == 3);

  const auto env_prompts = mock->prompts_for(ExtractionStep::WorldEnvironment);
  const auto full_prompts = mock->prompts_for(ExtractionStep::WorldFull);
  REQUIRE(env_prompts.size() == 3);
  REQUIRE(full_prompts.size() == 3);
  for (int i = 0; i < 3; ++i) {
    const auto& rec = a.round_records[static_cast<std::size_t>(i)];
    CHECK(rec.round_index == i);
    CHECK(algorithmic_fixes(rec.world_grid, a.story_package.legend) == rec.world_grid);
    if (i == 0) continue;
    const auto& prev = a.round_records[static_cast<std::size_t>(i - 1)];
    const auto world_text = prev.world_grid.to_text();
    const auto eval_text = dump_json(Json(prev.evaluation));
    for (const auto& p : {env_prompts[static_cast<std::size_t>(i)], full_prompts[static_cast<std::size_t>(i)]}) {
      CHECK(p.find(world_text) != std::string::npos);
      CHECK(p.find(eval_text) != std::string::npos);
    }
  }
  CHECK(env_prompts[0].find("Previous") == std::string::npos);
  CHECK(a.round_records[1].evaluation.novelty_distance.has_value());
}

TEST_CASE("one-round mode yields a single round on the same script") {
  TempDir out;
  const auto full = run(demo_config(out.path() / "a", demo::full_mode_script(3)));
  const auto one = run(demo_config(out.path() / "b", demo::full_mode_script(3), RunMode::OneRound));
  CHECK(full.round_records.size() == 3);
  CHECK(one.round_records.size() == 1);
  CHECK(one.completed);
}

TEST_CASE("ablation prompt kinds") {
  TempDir out;
  using S = ExtractionStep;
  {
    auto c = demo_config(out.path(), demo::direct_mode_script(3), RunMode::DirectGeneration);
    const auto a = run(c);
    CHECK(a.completed);
    CHECK(a.round_records.size() == 3);
    CHECK(generation_kinds(*c.provider.mock) == std::set<S>{S::Story, S::WorldFull});
    CHECK(a.story_package.characters.size() == 3);
  }
  {
    auto c = demo_config(out.path(), demo::full_mode_script(3), RunMode::OneStep);
    const auto a = run(c);
    CHECK(a.completed);
    CHECK(c.provider.mock->prompts_for(S::WorldEnvironment).empty());
    CHECK(a.round_records[0].environment_grid == a.round_records[0].world_grid);
  }
  {
    auto c = demo_config(out.path(), demo::full_mode_script(3), RunMode::NoGoals);
    const auto a = run(c);
    CHECK(a.completed);
    CHECK(c.provider.mock->prompts_for(S::Goals).empty());
    CHECK_FALSE(a.round_records[0].evaluation.playable);
    CHECK(a.agent_traces.empty());
  }
  {
    auto c = demo_config(out.path(), demo::full_mode_script(3), RunMode::NoImportantTiles);
    const auto a = run(c);
    CHECK(a.completed);
    const auto kinds = generation_kinds(*c.provider.mock);
    CHECK_FALSE(kinds.contains(S::ImportantTiles));
    CHECK_FALSE(kinds.contains(S::WalkableTiles));
    CHECK_FALSE(kinds.contains(S::ObjectTiles));
    CHECK(a.story_package.legend.walkable.contains('.'));
  }
  {
    auto c = demo_config(out.path(), demo::full_mode_script(3));
    run(c);
    CHECK(generation_kinds(*c.provider.mock).size() == 9);
  }
}

TEST_CASE("repeated goal parse failures exhaust the completion budget") {
  TempDir out;
  auto script = demo::extraction_entries();
  script.erase(std::remove_if(script.begin(), script.end(),
                              [](const ScriptEntry& e) { return e.first == ExtractionStep::Goals; }),
               script.end());
  for (int i = 0; i < 40; ++i) script.push_back({ExtractionStep::Goals, "no objectives here"});
  auto c = demo_config(out.path(), script);
  const auto a = run(c);
  CHECK_FALSE(a.completed);
  CHECK(a.tries_used == 10);
  CHECK(a.failures.size() == 10);
  CHECK(c.provider.mock->prompts_for(ExtractionStep::Goals).size() == 40);
  CHECK(a.round_records.empty());
  const fs::path dir = a.run_dir;
  CHECK(fs::exists(dir / "story.txt"));
  CHECK(fs::exists(dir / "transcript.jsonl"));
  const auto summary = Json::parse(read_file((dir / "summary.json").string()));
  CHECK(summary.at("completed") == false);
  CHECK(summary.at("tries_used") == 10);
}

TEST_CASE("a failed stage resumes instead of restarting") {
  TempDir out;
  auto script = demo::full_mode_script(1, 1);
  // One bad tileset reply burns reprompt budget 3 + 1 attempts, i.e. one try.
  std::vector<ScriptEntry> bad(4, {ExtractionStep::Tileset, "not json"});
  script.insert(script.begin() + 2, bad.begin(), bad.end());
  auto c = demo_config(out.path(), script, RunMode::Full, 1);
  c.agent_episodes = 1;
  const auto a = run(c);
  CHECK(a.completed);
  CHECK(a.tries_used == 2);
  CHECK(c.provider.mock->prompts_for(ExtractionStep::Story).size() == 1);
}

TEST_CASE("tries_used never exceeds the budget") {
  TempDir out;
  for (int budget : {1, 2, 5}) {
    auto c = demo_config(out.path(), {});
    c.completion_try_budget = budget;
    const auto a = run(c);
    CHECK_FALSE(a.completed);
    CHECK(a.tries_used == budget);
  }
}

TEST_CASE("missing tileset is a hard error") {
  TempDir out;
  auto c = demo_config(out.path(), demo::full_mode_script(1));
  c.env_tileset = (out.path() / "nope.csv").string();
  CHECK_THROWS_AS(run(c), DatasetError);
}

TEST_CASE("mock runs are byte-reproducible") {
  TempDir out;
  const auto script = demo::full_mode_script(3);
  const auto a = run(demo_config(out.path() / "one", script));
  const auto b = run(demo_config(out.path() / "two", script));
  const auto ta = read_tree(a.run_dir);
  const auto tb = read_tree(b.run_dir);
  CHECK(ta.size() >= 15);
  CHECK(ta == tb);
}

TEST_CASE("committed demo scripts match the generator") {
  const std::string dir = W2W_FIXTURE_DIR;
  CHECK(read_file(dir + "/demo_script.json") == script_to_json(demo::full_mode_script(3, 2)));
  CHECK(read_file(dir + "/demo_direct_script.json") == script_to_json(demo::direct_mode_script(3)));
  const auto world = WorldGrid::from_text(read_file(dir + "/demo_world.txt"));
  CHECK(world == WorldGrid::from_text(demo::join_rows(demo::world_variants()[0])));
}
