#include "w2w/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include "w2w/errors.hpp"
#include "w2w/text.hpp"

namespace w2w {

void to_json(Json& j, const EvaluationReport& r) {
  j = Json{{"playable", r.playable},
           {"is_novel", r.is_novel},
           {"novel_and_playable", r.novel_and_playable},
           {"char_tile_accuracy", r.char_tile_accuracy},
           {"important_tile_accuracy", r.important_tile_accuracy},
           {"astar_iterations_used", r.astar_iterations_used}};
  if (r.path_length) j["path_length"] = *r.path_length;
  if (r.novelty_distance) j["novelty_distance"] = *r.novelty_distance;
  if (r.coherence) j["coherence"] = *r.coherence;
  if (r.agent_reward) j["agent_reward"] = *r.agent_reward;
}

void from_json(const Json& j, EvaluationReport& r) {
  r = EvaluationReport{};
  r.playable = j.at("playable").get<bool>();
  r.is_novel = j.at("is_novel").get<bool>();
  r.novel_and_playable = j.at("novel_and_playable").get<bool>();
  r.char_tile_accuracy = j.at("char_tile_accuracy").get<double>();
  r.important_tile_accuracy = j.at("important_tile_accuracy").get<double>();
  r.astar_iterations_used = j.at("astar_iterations_used").get<int>();
  if (j.contains("path_length")) r.path_length = j.at("path_length").get<int>();
  if (j.contains("novelty_distance")) r.novelty_distance = j.at("novelty_distance").get<double>();
  if (j.contains("coherence")) r.coherence = j.at("coherence").get<int>();
  if (j.contains("agent_reward")) r.agent_reward = j.at("agent_reward").get<double>();
}

AStarResult astar(const SearchProblem& problem, int budget) {
  if (budget < 1) throw PreconditionError("A* budget must be >= 1");
  const auto& grid = problem.grid;
  if (!grid.in_bounds(problem.start) || !grid.in_bounds(problem.goal)) {
    throw PreconditionError("A* start and goal must lie inside the grid");
  }
  const int width = grid.width();
  const auto index = [width](Cell c) { return static_cast<std::size_t>(c.row) * width + c.col; };
  const auto heuristic = [&](Cell c) { return std::abs(c.row - problem.goal.row) + std::abs(c.col - problem.goal.col); };
  const auto enterable = [&](Cell c) {
    return grid.in_bounds(c) && (c == problem.goal || problem.passable.contains(grid.at(c)));
  };

  constexpr int kUnseen = std::numeric_limits<int>::max();
  const std::size_t cells = static_cast<std::size_t>(grid.height()) * width;
  std::vector<int> best_g(cells, kUnseen);
  std::vector<bool> closed(cells, false);
  std::vector<Cell> parent(cells);

  // (f, row, col, g): std::greater makes this a min-heap in exactly the
  // required tie-break order.
  using Entry = std::tuple<int, int, int, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  best_g[index(problem.start)] = 0;
  open.emplace(heuristic(problem.start), problem.start.row, problem.start.col, 0);

  AStarResult result;
  static constexpr Cell kSteps[] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
  while (!open.empty()) {
    const auto [f, row, col, g] = open.top();
    open.pop();
    const Cell cur{row, col};
    const auto ci = index(cur);
    if (closed[ci] || g > best_g[ci]) continue;
    if (result.expansions >= budget) return result;
    ++result.expansions;
    closed[ci] = true;

    if (cur == problem.goal) {
      std::vector<Cell> path{cur};
      while (path.back() != problem.start) path.push_back(parent[index(path.back())]);
      std::reverse(path.begin(), path.end());
      result.path = std::move(path);
      return result;
    }

    for (const auto& d : kSteps) {
      const Cell next{cur.row + d.row, cur.col + d.col};
      if (!enterable(next)) continue;
      const auto ni = index(next);
      if (closed[ni] || g + 1 >= best_g[ni]) continue;
      best_g[ni] = g + 1;
      parent[ni] = cur;
      open.emplace(g + 1 + heuristic(next), next.row, next.col, g + 1);
    }
  }
  return result;
}

PlayabilityResult playability(const WorldGrid& world, const std::vector<Goal>& goals, const TileLegend& legend,
                              Symbol protagonist, int budget, ObjectiveOrder order) {
  const auto start = locate_symbol(world, protagonist);
  if (!start) throw MissingProtagonist(std::string("protagonist '") + protagonist + "' is not in the world");

  PlayabilityResult out;
  if (goals.empty()) return out;
  if (std::any_of(goals.begin(), goals.end(), [](const Goal& g) { return !g.position; })) return out;

  std::vector<const Goal*> ordered;
  for (const auto& g : goals) ordered.push_back(&g);
  std::sort(ordered.begin(), ordered.end(), [](const Goal* a, const Goal* b) { return a->index < b->index; });

  auto passable = legend.walkable;
  for (const auto& g : goals) passable.insert(g.target_symbol);
  passable.insert(protagonist);  // the start cell is vacated after the first move
  SearchProblem problem{world, std::move(passable), *start, *start};
  int total = 0;
  auto remaining = [&] { return budget - out.expansions; };

  while (!ordered.empty()) {
    std::size_t pick = 0;
    AStarResult leg;
    if (order == ObjectiveOrder::Story) {
      if (remaining() < 1) return out;
      problem.goal = *ordered.front()->position;
      leg = astar(problem, remaining());
      out.expansions += leg.expansions;
    } else {
      // Nearest reachable goal next; every probe spends budget.
      std::optional<std::size_t> best;
      for (std::size_t i = 0; i < ordered.size(); ++i) {
        if (remaining() < 1) return out;
        problem.goal = *ordered[i]->position;
        auto probe = astar(problem, remaining());
        out.expansions += probe.expansions;
        if (probe.path && (!best || probe.path->size() < leg.path->size())) {
          best = i;
          leg = std::move(probe);
        }
      }
      if (!best) return out;
      pick = *best;
    }
    if (!leg.path) return out;
    total += static_cast<int>(leg.path->size()) - 1;
    problem.start = leg.path->back();
    out.legs.push_back(std::move(*leg.path));
    ordered.erase(ordered.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  out.playable = true;
  out.path_length = total;
  return out;
}

double novelty_distance(const WorldGrid& a, const WorldGrid& b) {
  const int h = std::max(a.height(), b.height());
  const int w = std::max(a.width(), b.width());
  // '\0' marks padding; it is never a valid symbol.
  const auto symbol_at = [](const WorldGrid& g, int r, int c) -> char {
    return g.in_bounds(Cell{r, c}) ? g.at(Cell{r, c}) : '\0';
  };
  long long squared = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (symbol_at(a, r, c) != symbol_at(b, r, c)) squared += 2;
    }
  }
  return std::sqrt(static_cast<double>(squared));
}

bool is_novel(const WorldGrid& w, const std::vector<WorldGrid>& prior, double threshold) {
  if (!(threshold > 0)) throw PreconditionError("novelty threshold must be > 0");
  return std::all_of(prior.begin(), prior.end(),
                     [&](const WorldGrid& p) { return novelty_distance(w, p) >= threshold; });
}

double char_tile_accuracy(const WorldGrid& world, const std::vector<CharacterInfo>& characters) {
  if (characters.empty()) throw PreconditionError("char_tile_accuracy needs at least one character");
  const auto placed = std::count_if(characters.begin(), characters.end(), [&](const CharacterInfo& c) {
    return c.symbol != '\0' && world.contains(c.symbol);
  });
  return static_cast<double>(placed) / static_cast<double>(characters.size());
}

double important_tile_accuracy(const WorldGrid& world, const TileLegend& legend) {
  if (legend.important.empty()) throw EmptyImportantSet("legend has no important tiles");
  const auto placed = std::count_if(legend.important.begin(), legend.important.end(),
                                    [&](Symbol s) { return world.contains(s); });
  return static_cast<double>(placed) / static_cast<double>(legend.important.size());
}

int parse_coherence(std::string_view text) {
  const auto blocks = fenced_blocks(text);
  auto value = blocks.empty() ? std::nullopt : first_integer(blocks.back().body);
  if (!value) value = first_integer(text);
  if (!value) throw ParseFailure("no integer score in coherence reply");
  return static_cast<int>(std::clamp<long long>(*value, 0, 100));
}

int coherence_judge(const std::string& story, const TileLegend& legend, const WorldGrid& world, LlmSession& session) {
  const PromptContext ctx{{"story", story}, {"tile_mapping", serialize_tile_mapping(legend)}, {"world", world.to_text()}};
  return run_step<int>(session, ExtractionStep::CoherenceJudge, ctx,
                       [](std::string_view t, Warnings&) { return parse_coherence(t); })
      .value;
}

EvaluationReport evaluate_world(const WorldGrid& world, const StoryPackage& package,
                                const std::vector<WorldGrid>& prior_worlds, const EvalSettings& settings,
                                LlmSession* judge, Warnings& notes) {
  EvaluationReport r;
  if (const auto* hero = package.protagonist()) {
    try {
      const auto play = playability(world, package.goals, package.legend, hero->symbol, settings.astar_budget,
                                    settings.order);
      r.playable = play.playable;
      r.path_length = play.path_length;
      r.astar_iterations_used = play.expansions;
    } catch (const MissingProtagonist& e) {
      notes.push_back(e.what());
    }
  } else {
    notes.push_back("no protagonist known; world scored unplayable");
  }
  if (package.goals.empty()) notes.push_back("no objectives; world scored unplayable");

  if (!prior_worlds.empty()) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : prior_worlds) best = std::min(best, novelty_distance(world, p));
    r.novelty_distance = best;
  }
  r.is_novel = is_novel(world, prior_worlds, settings.novelty_threshold);
  r.novel_and_playable = r.is_novel && r.playable;

  if (!package.characters.empty()) {
    r.char_tile_accuracy = char_tile_accuracy(world, package.characters);
  } else {
    notes.push_back("no characters extracted; character tile accuracy is 0");
  }
  if (!package.legend.important.empty()) {
    r.important_tile_accuracy = important_tile_accuracy(world, package.legend);
  } else {
    notes.push_back("no important tiles extracted; important tile accuracy is 0");
  }

  if (judge) r.coherence = coherence_judge(package.story_text, package.legend, world, *judge);
  return r;
}

}  // namespace w2w
