#pragma once

#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "w2w/extraction.hpp"
#include "w2w/json_io.hpp"
#include "w2w/worldmodel.hpp"

namespace w2w {

struct EvaluationReport {
  bool playable = false;
  std::optional<int> path_length;          // total moves over all objectives
  std::optional<double> novelty_distance;  // min distance to earlier rounds
  bool is_novel = true;
  bool novel_and_playable = false;
  double char_tile_accuracy = 0.0;
  double important_tile_accuracy = 0.0;
  std::optional<int> coherence;  // 0..100, absent when no judge ran
  std::optional<double> agent_reward;
  int astar_iterations_used = 0;
};

// Absent optionals are omitted rather than written as null.
void to_json(Json& j, const EvaluationReport& r);
void from_json(const Json& j, EvaluationReport& r);

struct SearchProblem {
  WorldGrid grid;
  std::set<Symbol> passable;
  Cell start;
  Cell goal;
};

struct AStarResult {
  std::optional<std::vector<Cell>> path;  // start..goal inclusive
  int expansions = 0;
};

inline constexpr int kDefaultAStarBudget = 1000;

// 4-connected A* with a Manhattan heuristic. The goal cell is always
// enterable; the start cell need not be passable. Fails once `budget` node
// expansions are spent. Frontier order: lower f, then row, then column.
AStarResult astar(const SearchProblem& problem, int budget);

enum class ObjectiveOrder { Story, NearestFirst };

struct PlayabilityResult {
  bool playable = false;
  std::optional<int> path_length;
  int expansions = 0;
  std::vector<std::vector<Cell>> legs;
};

// Chains A* legs from the protagonist through every goal. Passable symbols
// are the walkable set, every goal target and the protagonist's own symbol. All legs share one
// expansion budget. Goals without a position make the world unplayable, as
// does an empty goal list. Throws MissingProtagonist if the symbol is absent.
PlayabilityResult playability(const WorldGrid& world, const std::vector<Goal>& goals, const TileLegend& legend,
                              Symbol protagonist, int budget, ObjectiveOrder order = ObjectiveOrder::Story);

// Euclidean distance between per-cell one-hot encodings. Grids are padded to
// a common bounding box; padding counts as its own symbol, so every
// differing cell contributes 2 to the squared distance.
double novelty_distance(const WorldGrid& a, const WorldGrid& b);

// sqrt(2 * 8): at least eight differing cells.
inline constexpr double kDefaultNoveltyThreshold = 4.0;

bool is_novel(const WorldGrid& w, const std::vector<WorldGrid>& prior, double threshold);

double char_tile_accuracy(const WorldGrid& world, const std::vector<CharacterInfo>& characters);
double important_tile_accuracy(const WorldGrid& world, const TileLegend& legend);

// First integer of the reply (inside the last fence when there is one),
// clamped to [0, 100].
int parse_coherence(std::string_view text);

int coherence_judge(const std::string& story, const TileLegend& legend, const WorldGrid& world, LlmSession& session);

struct EvalSettings {
  int astar_budget = kDefaultAStarBudget;
  double novelty_threshold = kDefaultNoveltyThreshold;
  ObjectiveOrder order = ObjectiveOrder::Story;
};

// Every metric for one repaired world. `judge` may be null to skip the
// coherence prompt. Degenerate inputs (no protagonist, no characters, empty
// important set) score as unplayable / 0.0 and are noted in `notes`.
EvaluationReport evaluate_world(const WorldGrid& world, const StoryPackage& package,
                                const std::vector<WorldGrid>& prior_worlds, const EvalSettings& settings,
                                LlmSession* judge, Warnings& notes);

}  // namespace w2w
