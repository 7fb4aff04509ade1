// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/generators.hpp"
#include "../support/temp_dir.hpp"
#include "cli.hpp"
#include "w2w/agent.hpp"
#include "w2w/errors.hpp"
#include "w2w/eval.hpp"
#include "w2w/pipeline.hpp"
#include "w2w/text.hpp"
#include "w2w/tiles.hpp"

using namespace w2w;
using w2w::testing::TempDir;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = W2W_FIXTURE_DIR;
const std::string kAssets = W2W_ASSET_DIR;

// Collects the first few failures of a criterion.
struct Check {
  std::vector<std::string> failures;
  int count = 0;
  void expect(bool ok, const std::string& what) {
    ++count;
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok && failures.size() == 5) failures.push_back("...");
  }
  bool ok() const { return failures.empty(); }
};

// ---- oracles ---------------------------------------------------------------

std::optional<int> bfs_distance(const WorldGrid& g, const std::set<Symbol>& passable, Cell start, Cell goal) {
  std::vector<std::vector<int>> dist(static_cast<std::size_t>(g.height()),
                                     std::vector<int>(static_cast<std::size_t>(g.width()), -1));
  std::deque<Cell> q{start};
  dist[start.row][start.col] = 0;
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop_front();
    if (c == goal) return dist[c.row][c.col];
    const int dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
      const Cell n{c.row + dr[k], c.col + dc[k]};
      if (n.row < 0 || n.col < 0 || n.row >= g.height() || n.col >= g.width()) continue;
      if (dist[n.row][n.col] >= 0) continue;
      if (!(n == goal) && !passable.contains(g.at(n))) continue;
      dist[n.row][n.col] = dist[c.row][c.col] + 1;
      q.push_back(n);
    }
  }
  return std::nullopt;
}

bool valid_path(const std::vector<Cell>& path, const WorldGrid& g, const std::set<Symbol>& passable, Cell start,
                Cell goal) {
  if (path.empty() || !(path.front() == start) || !(path.back() == goal)) return false;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const auto a = path[i - 1], b = path[i];
    if (std::abs(a.row - b.row) + std::abs(a.col - b.col) != 1) return false;
    if (i + 1 < path.size() && !passable.contains(g.at(b))) return false;
  }
  return true;
}

// Explicit one-hot vectors over the union alphabet plus a padding symbol.
double novelty_oracle(const WorldGrid& a, const WorldGrid& b) {
  const int h = std::max(a.height(), b.height());
  int w = 0;
  for (const auto* g : {&a, &b}) {
    for (const auto& r : g->rows()) w = std::max(w, static_cast<int>(r.size()));
  }
  std::set<int> alphabet{-1};
  auto sym = [](const WorldGrid& g, int r, int c) -> int {
    if (r >= g.height() || c >= static_cast<int>(g.rows()[r].size())) return -1;
    return static_cast<unsigned char>(g.rows()[r][c]);
  };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      alphabet.insert(sym(a, r, c));
      alphabet.insert(sym(b, r, c));
    }
  }
  double sq = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int s : alphabet) {
        const double x = sym(a, r, c) == s ? 1.0 : 0.0;
        const double y = sym(b, r, c) == s ? 1.0 : 0.0;
        sq += (x - y) * (x - y);
      }
    }
  }
  return std::sqrt(sq);
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path().string());
  }
  return out;
}

RunConfig demo_run(const fs::path& out, RunMode mode, const std::vector<ScriptEntry>& script) {
  RunConfig c;
  c.mode = mode;
  c.rounds = 3;
  c.objective_count = 8;
  c.seed = 1;
  c.provider = mock_script(script);
  c.env_tileset = kAssets + "/placeholder/environment.csv";
  c.char_tileset = kAssets + "/placeholder/characters.csv";
  c.template_dir = W2W_TEMPLATE_DIR;
  c.output_root = out.string();
  return c;
}

std::set<ExtractionStep> generation_kinds(const MockProvider& mock) {
  std::set<ExtractionStep> out;
  for (const auto& r : mock.recorded()) {
    if (is_generation_step(r.step)) out.insert(r.step);
  }
  return out;
}

// ---- criteria ----------------------------------------------------------------

Check grid_repair() {
  Check ck;
  const auto legend = testing::sample_legend();
  std::mt19937_64 rng(101);
  for (int i = 0; i < 1000; ++i) {
    const auto g = testing::random_ragged_grid(rng, 3, 30, 5);
    const auto f = algorithmic_fixes(g, legend);
    const auto tag = "grid " + std::to_string(i);
    ck.expect(f.is_rectangular(), tag + " not rectangular");
    ck.expect(f.height() == g.height(), tag + " height changed");
    for (Symbol s : legend.character_symbols) ck.expect(f.count(s) <= 1, tag + " duplicate character");
    for (int r = 0; r < g.height(); ++r) {
      ck.expect(f.rows()[r].size() >= g.rows()[r].size(), tag + " row shortened");
    }
    ck.expect(algorithmic_fixes(f, legend) == f, tag + " not idempotent");
  }
  TileLegend plain;
  plain.entries = {{'A', "a"}, {'B', "b"}, {'C', "c"}};
  plain.walkable = {'A'};
  ck.expect(algorithmic_fixes(WorldGrid({"ABB", "AB"}), plain) == WorldGrid({"ABB", "ABB"}),
            "[ABB,AB] -> [ABB,ABB]");
  TileLegend with_char = plain;
  with_char.entries['@'] = "hero";
  with_char.character_symbols = {'@'};
  ck.expect(algorithmic_fixes(WorldGrid({"A@", "ABC"}), with_char) == WorldGrid({"A@A", "ABC"}),
            "[A@,ABC] -> [A@A,ABC]");
  return ck;
}

Check astar_correctness() {
  Check ck;
  std::mt19937_64 rng(202);
  const std::set<Symbol> passable{'G'};
  int found = 0, absent = 0;
  for (int i = 0; i < 500; ++i) {
    auto g = testing::random_obstacle_grid(rng, 20, 20, 0.3);
    std::uniform_int_distribution<int> pos(0, 19);
    Cell s{pos(rng), pos(rng)}, t{pos(rng), pos(rng)};
    g.set(s, 'G');
    g.set(t, 'G');
    const SearchProblem p{g, passable, s, t};
    const auto oracle = bfs_distance(g, passable, s, t);
    const auto r = astar(p, 10000);
    const auto tag = "grid " + std::to_string(i);
    ck.expect(r.path.has_value() == oracle.has_value(), tag + " existence differs from BFS");
    if (r.path && oracle) {
      ++found;
      ck.expect(static_cast<int>(r.path->size()) - 1 == *oracle, tag + " length differs from BFS");
      ck.expect(valid_path(*r.path, g, passable, s, t), tag + " path invalid");
    } else if (!oracle) {
      ++absent;
    }
    // Budget monotonicity around the 1,000-expansion budget.
    bool prev_found = false;
    for (int b : {1, 10, 100, 500, 999, 1000, 1001, 2000, 10000}) {
      const auto rb = astar(p, b);
      ck.expect(rb.expansions <= b, tag + " exceeded budget");
      if (prev_found) ck.expect(rb.path.has_value(), tag + " lost its path at budget " + std::to_string(b));
      if (rb.path && oracle) ck.expect(static_cast<int>(rb.path->size()) - 1 == *oracle, tag + " budgeted length");
      prev_found = rb.path.has_value();
    }
  }
  ck.expect(found > 50 && absent > 5, "generator covers both outcomes");
  return ck;
}

Check novelty_metric() {
  Check ck;
  std::mt19937_64 rng(303);
  const std::string alphabet = "ABCDEFG";
  std::uniform_int_distribution<int> dim(3, 15);
  for (int i = 0; i < 200; ++i) {
    const auto a = testing::random_symbol_grid(rng, dim(rng), dim(rng), alphabet);
    const auto b = testing::random_symbol_grid(rng, dim(rng), dim(rng), alphabet);
    ck.expect(novelty_distance(a, a) == 0.0, "d(w,w) != 0");
    ck.expect(novelty_distance(a, b) == novelty_distance(b, a), "asymmetric pair " + std::to_string(i));
    ck.expect(std::abs(novelty_distance(a, b) - novelty_oracle(a, b)) < 1e-9, "oracle mismatch " + std::to_string(i));
  }
  for (int k : {1, 4, 8, 16}) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto a = testing::random_symbol_grid(rng, 10, 10, alphabet);
      auto b = a;
      std::vector<int> cells(100);
      std::iota(cells.begin(), cells.end(), 0);
      std::shuffle(cells.begin(), cells.end(), rng);
      for (int j = 0; j < k; ++j) {
        const Cell c{cells[j] / 10, cells[j] % 10};
        b.set(c, a.at(c) == 'Z' ? 'Y' : 'Z');
      }
      ck.expect(std::abs(novelty_distance(a, b) - std::sqrt(2.0 * k)) < 1e-9, "sqrt(2k) law at k=" + std::to_string(k));
    }
  }
  for (int i = 0; i < 100; ++i) {
    const auto a = testing::random_symbol_grid(rng, dim(rng), dim(rng), alphabet);
    const auto b = testing::random_symbol_grid(rng, dim(rng), dim(rng), alphabet);
    std::string perm = "abcdefg";
    std::shuffle(perm.begin(), perm.end(), rng);
    auto relabel = [&](const WorldGrid& g) {
      auto rows = g.rows();
      for (auto& r : rows) {
        for (auto& c : r) c = perm[static_cast<std::size_t>(c - 'A')];
      }
      return WorldGrid(rows);
    };
    ck.expect(novelty_distance(a, b) == novelty_distance(relabel(a), relabel(b)), "relabeling pair " + std::to_string(i));
  }
  return ck;
}

Check retrieval() {
  Check ck;
  const BagOfWordsEmbedder embedder;
  for (auto cat : {TileCategory::Environment, TileCategory::Character}) {
    const auto csv = kAssets + (cat == TileCategory::Environment ? "/placeholder/environment.csv"
                                                                 : "/placeholder/characters.csv");
    auto ds = load_dataset(csv, cat);
    embed_dataset(ds, embedder);
    auto scaled = ds;
    for (auto& a : scaled.assets) {
      for (auto& x : a.embedding) x *= 3.0;
    }
    ck.expect(ds.assets.size() >= 12, "dataset too small");
    for (const auto& a : ds.assets) {
      ck.expect(retrieve_tile(a.description, ds, embedder).id == a.id, "self-retrieval failed for '" + a.description + "'");
      ck.expect(retrieve_tile(a.description, scaled, embedder).id == a.id, "scaled retrieval failed for '" + a.description + "'");
    }
    std::mt19937_64 rng(404);
    for (int q = 0; q < 50; ++q) {
      const auto& a = ds.assets[rng() % ds.assets.size()];
      const auto& b = ds.assets[rng() % ds.assets.size()];
      const auto query = a.description + " " + b.description;
      ck.expect(retrieve_tile(query, ds, embedder).id == retrieve_tile(query, scaled, embedder).id,
                "argmax changed under scaling for '" + query + "'");
    }
  }
  return ck;
}

Check reward_law() {
  Check ck;
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> d(0, 200);
  for (int i = 0; i < 100; ++i) {
    const int a = d(rng), b = d(rng);
    ck.expect(objective_reward(a, b, true) == 1.0, "completed != 1.0");
  }
  ck.expect(std::abs(objective_reward(10, 5, false) - 0.5) < 1e-12, "(10,5) != 0.5");
  ck.expect(std::abs(objective_reward(10, 15, false) + 0.5) < 1e-12, "(10,15) != -0.5");
  double prev = objective_reward(12, 0, false);
  for (int de = 1; de <= 40; ++de) {
    const double r = objective_reward(12, de, false);
    ck.expect(r < prev, "not strictly decreasing at d_end=" + std::to_string(de));
    prev = r;
  }
  return ck;
}

// Random world with a protagonist and positioned goals of every kind.
struct Fixture {
  WorldGrid world;
  std::vector<Goal> goals;
};

std::optional<Fixture> random_fixture(std::mt19937_64& rng, const TileLegend& legend) {
  auto g = testing::random_obstacle_grid(rng, 12, 12, 0.25);
  std::vector<Cell> free;
  for (int r = 0; r < 12; ++r) {
    for (int c = 0; c < 12; ++c) {
      if (g.at({r, c}) == 'G') free.push_back({r, c});
    }
  }
  std::uniform_int_distribution<int> n(3, 8);
  const int count = n(rng);
  if (static_cast<int>(free.size()) < count + 3) return std::nullopt;
  std::shuffle(free.begin(), free.end(), rng);
  g.set(free[0], '@');
  g.set(free[1], 'E');
  Fixture fx;
  bool enemy_used = false;
  for (int i = 0; i < count; ++i) {
    const Cell c = free[static_cast<std::size_t>(i + 2)];
    Goal goal;
    goal.index = i;
    const int kind = static_cast<int>(rng() % 3);
    if (kind == 2 && !enemy_used) {
      goal.target_symbol = 'M';
      goal.target_kind = GoalKind::HitEnemy;
      enemy_used = true;
    } else if (kind == 1) {
      goal.target_symbol = 'K';
      goal.target_kind = GoalKind::PickObject;
    } else {
      goal.target_symbol = 'D';
      goal.target_kind = GoalKind::ReachTile;
    }
    goal.description = "objective " + std::to_string(i);
    g.set(c, goal.target_symbol);
    goal.position = c;
    fx.goals.push_back(goal);
  }
  fx.world = g;
  (void)legend;
  return fx;
}

Check cross_module() {
  Check ck;
  const auto legend = testing::sample_legend();
  std::mt19937_64 rng(606);
  int worlds = 0, attempts = 0;
  while (worlds < 50 && attempts < 5000) {
    ++attempts;
    auto fx = random_fixture(rng, legend);
    if (!fx) continue;
    const auto play = playability(fx->world, fx->goals, legend, '@', 100000);
    if (!play.playable) continue;
    ++worlds;
    std::vector<std::vector<Action>> plan;
    for (std::size_t i = 0; i < play.legs.size(); ++i) {
      const auto& leg = play.legs[i];
      std::vector<Action> acts;
      for (std::size_t k = 1; k < leg.size(); ++k) {
        const auto a = leg[k - 1], b = leg[k];
        acts.push_back(b.row < a.row   ? Action::MoveUp
                       : b.row > a.row ? Action::MoveDown
                       : b.col < a.col ? Action::MoveLeft
                                       : Action::MoveRight);
      }
      if (fx->goals[i].target_kind == GoalKind::PickObject) acts.push_back(Action::PickObject);
      if (fx->goals[i].target_kind == GoalKind::HitEnemy) acts.push_back(Action::HitEnemy);
      plan.push_back(acts);
    }
    std::size_t next = 0;
    ScriptedPolicy policy([&](const PolicyRequest&) { return plan.at(next++); });
    const auto trace = run_episode(fx->world, fx->goals, legend, '@', policy, {});
    const auto tag = "world " + std::to_string(worlds);
    ck.expect(trace.episode_reward == 1.0, tag + " episode reward " + std::to_string(trace.episode_reward));
    for (const auto& o : trace.per_objective) ck.expect(o.completed, tag + " objective not completed");
  }
  ck.expect(worlds == 50, "only " + std::to_string(worlds) + " playable worlds generated");
  return ck;
}

Check determinism() {
  Check ck;
  TempDir tmp;
  const auto script = load_script_file(kFixtures + "/demo_script.json");
  auto c1 = demo_run(tmp.path() / "first", RunMode::Full, script);
  auto c2 = demo_run(tmp.path() / "second", RunMode::Full, script);
  const auto a = run(c1);
  const auto b = run(c2);
  ck.expect(a.completed && b.completed, "demo run did not complete");
  ck.expect(a.round_records.size() == 3, "expected 3 rounds");
  ck.expect(a.story_package.goals.size() == 8, "expected 8 objectives");
  const auto ta = read_tree(a.run_dir), tb = read_tree(b.run_dir);
  ck.expect(ta.contains("world.png") && ta.contains("round_2/evals.json"), "artifact files missing");
  ck.expect(ta == tb, "artifact directories differ");
  const auto env = c1.provider.mock->prompts_for(ExtractionStep::WorldEnvironment);
  const auto full = c1.provider.mock->prompts_for(ExtractionStep::WorldFull);
  ck.expect(env.size() == 3 && full.size() == 3, "expected 3 prompts per world step");
  for (std::size_t i = 1; i < std::min<std::size_t>(3, std::min(env.size(), full.size())); ++i) {
    const auto& prev = a.round_records[i - 1];
    const auto world_text = prev.world_grid.to_text();
    const auto eval_text = dump_json(Json(prev.evaluation));
    for (const auto& p : {env[i], full[i]}) {
      ck.expect(p.find(world_text) != std::string::npos, "round " + std::to_string(i) + " prompt lacks previous world");
      ck.expect(p.find(eval_text) != std::string::npos, "round " + std::to_string(i) + " prompt lacks previous evaluation");
    }
  }
  return ck;
}

Check ablation_shapes() {
  Check ck;
  using S = ExtractionStep;
  TempDir tmp;
  const auto full_script = load_script_file(kFixtures + "/demo_script.json");
  const auto direct_script = load_script_file(kFixtures + "/demo_direct_script.json");

  auto direct = demo_run(tmp.path(), RunMode::DirectGeneration, direct_script);
  const auto d = run(direct);
  ck.expect(d.completed, "direct run did not complete");
  ck.expect(generation_kinds(*direct.provider.mock) == std::set<S>{S::Story, S::WorldFull},
            "direct generation issued other prompt kinds");

  auto one_step = demo_run(tmp.path(), RunMode::OneStep, full_script);
  run(one_step);
  ck.expect(one_step.provider.mock->prompts_for(S::WorldEnvironment).empty(), "one-step issued an environment prompt");
  ck.expect(!one_step.provider.mock->prompts_for(S::WorldFull).empty(), "one-step issued no world prompt");

  auto one_round = demo_run(tmp.path(), RunMode::OneRound, full_script);
  ck.expect(run(one_round).round_records.size() == 1, "one-round produced more than one round");

  auto no_goals = demo_run(tmp.path(), RunMode::NoGoals, full_script);
  run(no_goals);
  ck.expect(no_goals.provider.mock->prompts_for(S::Goals).empty(), "no-goals issued a goals prompt");

  auto no_important = demo_run(tmp.path(), RunMode::NoImportantTiles, full_script);
  run(no_important);
  const auto k = generation_kinds(*no_important.provider.mock);
  ck.expect(!k.contains(S::ImportantTiles) && !k.contains(S::WalkableTiles) && !k.contains(S::ObjectTiles),
            "no-important issued tile list prompts");

  auto full = demo_run(tmp.path(), RunMode::Full, full_script);
  run(full);
  ck.expect(generation_kinds(*full.provider.mock).size() == 9, "full mode did not issue 9 prompt kinds");
  return ck;
}

Check accuracy_formulas() {
  Check ck;
  const std::vector<CharacterInfo> chars{{"a", "", CharacterRole::Protagonist, '@'},
                                         {"b", "", CharacterRole::Antagonist, 'E'},
                                         {"c", "", CharacterRole::NonPlayer, 'M'},
                                         {"d", "", CharacterRole::NonPlayer, 'N'}};
  const WorldGrid placed3({"G@GG", "GEGM", "GGGG"});
  ck.expect(char_tile_accuracy(placed3, chars) == 0.75, "3 of 4 characters != 0.75");
  // Duplicates and symbols outside the character list must not raise the score.
  const WorldGrid noisy({"@@EE", "MMXY", "ZQ@G"});
  ck.expect(char_tile_accuracy(noisy, chars) == 0.75, "adversarial character grid != 0.75");

  TileLegend legend;
  const std::string important = "abcdefghijklmno";  // the cap of 15
  for (char s : important) legend.entries[s] = std::string("tile ") + s;
  legend.important = {important.begin(), important.end()};
  const WorldGrid twelve({"abcdef", "ghijkl", "......"});
  ck.expect(important_tile_accuracy(twelve, legend) == 0.8, "12 of 15 important tiles != 0.8");
  const WorldGrid extra({"abcdefaa", "ghijklXY", "PQRSTUVW"});
  ck.expect(important_tile_accuracy(extra, legend) == 0.8, "adversarial important grid != 0.8");
  const WorldGrid all({important, "xyzXYZ!?"});
  const double full = important_tile_accuracy(all, legend);
  ck.expect(full >= 0.0 && full <= 1.0 && full == 1.0, "accuracy outside [0,1]");
  const double c_all = char_tile_accuracy(WorldGrid({"@EMN@EMN", "QQQQQQQQ"}), chars);
  ck.expect(c_all >= 0.0 && c_all <= 1.0 && c_all == 1.0, "character accuracy outside [0,1]");
  return ck;
}

Check batch_protocol() {
  Check ck;
  TempDir tmp;
  auto c = cli::default_config();
  c.run.env_tileset = kAssets + "/placeholder/environment.csv";
  c.run.char_tileset = kAssets + "/placeholder/characters.csv";
  c.run.template_dir = W2W_TEMPLATE_DIR;
  c.run.script_path = kFixtures + "/demo_script.json";
  c.run.output_root = (tmp.path() / "batch").string();
  c.batch_runs = 10;
  c.workers = 4;
  const auto report = cli::run_batch(c);
  const auto j = Json::parse(read_file((tmp.path() / "batch/batch_report.json").string()));
  ck.expect(j.at("rows").size() == 1, "expected one report row");
  const auto& row = j.at("rows")[0];
  ck.expect(row.at("runs") == 10, "expected 10 runs");
  int novelty = 0, playable = 0, both = 0, completed = 0, dirs = 0;
  for (const auto& d : row.at("run_dirs")) {
    const auto s = Json::parse(read_file(d.get<std::string>() + "/summary.json"));
    ++dirs;
    completed += s.at("completed").get<bool>();
    if (!s.contains("final_evaluation")) continue;
    const auto& e = s.at("final_evaluation");
    novelty += e.at("is_novel").get<bool>();
    playable += e.at("playable").get<bool>();
    both += e.at("novel_and_playable").get<bool>();
  }
  ck.expect(dirs == 10, "expected 10 run directories");
  const auto& counts = row.at("counts");
  ck.expect(counts.at("novelty") == novelty, "novelty count differs from recount");
  ck.expect(counts.at("playability") == playable, "playability count differs from recount");
  ck.expect(counts.at("novel_and_playable") == both, "novel-and-playable count differs from recount");
  ck.expect(counts.at("completion") == completed, "completion count differs from recount");
  const auto formatted = row.at("agent_reward").at("formatted").get<std::string>();
  ck.expect(std::regex_match(formatted, std::regex(R"(-?\d+\.\d{4} ± \d+\.\d{2})")),
            "reward column '" + formatted + "' is not mean ± std");
  ck.expect(read_file((tmp.path() / "batch/batch_report.txt").string()).find(formatted) != std::string::npos,
            "text table lacks the reward column");
  return ck;
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // 0: no runtime limit
  std::function<Check()> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "grid repair: 1000 ragged grids, padding examples", 5.0, grid_repair},
      {2, "A* matches BFS on 500 grids, budget monotonicity", 10.0, astar_correctness},
      {3, "novelty metric: identity, symmetry, sqrt(2k), relabeling", 0.0, novelty_metric},
      {4, "retrieval: self-match on every placeholder row, scale invariance", 0.0, retrieval},
      {5, "reward law: completion, (10,5), (10,15), strict decrease", 0.0, reward_law},
      {6, "cross-module: A* legs complete 50 fixture worlds with reward 1.0", 0.0, cross_module},
      {7, "end-to-end determinism and feedback in later rounds", 30.0, determinism},
      {8, "ablation plan shapes", 0.0, ablation_shapes},
      {9, "accuracy formulas 0.75 / 0.8, clamped", 0.0, accuracy_formulas},
      {10, "batch protocol: recount and mean ± std column", 0.0, batch_protocol},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Check ck;
    try {
      ck = c.body();
    } catch (const std::exception& e) {
      ck.failures.push_back(std::string("threw: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_seconds > 0 && secs >= c.limit_seconds) {
      ck.failures.push_back("runtime " + std::to_string(secs) + " s over the limit");
    }
    const bool ok = ck.ok();
    if (!ok) ++failed;
    char limit[32] = "";
    if (c.limit_seconds > 0) std::snprintf(limit, sizeof limit, ", limit %.0f s", c.limit_seconds);
    std::printf("criterion %2d %s  %s (%d checks, %.3f s%s)\n", c.id, ok ? "PASS" : "FAIL", c.name, ck.count, secs,
                limit);
    for (const auto& f : ck.failures) std::printf("    %s\n", f.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
