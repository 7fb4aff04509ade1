#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "w2w/extraction.hpp"
#include "w2w/json_io.hpp"
#include "w2w/worldmodel.hpp"

namespace w2w {

enum class Action { MoveUp, MoveDown, MoveLeft, MoveRight, PickObject, HitEnemy };

inline constexpr Action kAllActions[] = {Action::MoveUp,    Action::MoveDown,   Action::MoveLeft,
                                         Action::MoveRight, Action::PickObject, Action::HitEnemy};

// Canonical lowercase names: "move up", ..., "pick object", "hit enemy".
std::string action_name(Action a);
// Case-insensitive; spaces, underscores and hyphens are interchangeable.
std::optional<Action> parse_action(std::string_view token);

inline constexpr std::size_t kMaxActionsPerObjective = 256;

struct ActionList {
  std::vector<Action> actions;
  Warnings warnings;
};

// Actions from the last fenced block, newline or comma separated. Unknown
// tokens are skipped with a warning; the list is capped. Throws ParseFailure
// when the reply has no fenced block.
ActionList parse_action_list(std::string_view text);

struct AgentState {
  Cell position;
  WorldGrid world;  // the protagonist's own tile is not kept on the grid
  Symbol avatar = '@';
  std::set<int> completed_goals;  // goal indices
  std::size_t current_goal = 0;   // position in the index-ordered goal list
};

// Lifts the protagonist off the grid, leaving the fill tile behind.
AgentState initial_state(const WorldGrid& world, const TileLegend& legend, Symbol protagonist);

// Walkable symbols plus every goal target.
std::set<Symbol> agent_passable(const TileLegend& legend, const std::vector<Goal>& goals);

// World text with the avatar drawn at its position.
std::string agent_view(const AgentState& state);

// `goals` must be ordered by index; the state's current goal is the only one
// that can complete.
AgentState step(const AgentState& state, Action action, const TileLegend& legend, const std::vector<Goal>& goals);

// 1.0 when completed; otherwise progress (d_start - d_end) / max(d_start, 1)
// when closer, or a regret in (-1, 0) that falls strictly as d_end grows.
double objective_reward(int d_start, int d_end, bool completed);

// Shortest move count from the agent to the goal cell, plus one for the
// pending pick/hit on interaction goals; 2*(height+width) when unreachable.
// An unfinished objective therefore never sits at distance 0.
int agent_distance(const AgentState& state, const Goal& goal, const std::set<Symbol>& passable);

struct ObjectiveTrace {
  int goal_index = 0;
  std::vector<Action> actions;
  double reward = 0.0;
  bool completed = false;
  Warnings warnings;
};

struct EpisodeTrace {
  std::vector<ObjectiveTrace> per_objective;
  double episode_reward = 0.0;
};

void to_json(Json& j, const ObjectiveTrace& t);
void from_json(const Json& j, ObjectiveTrace& t);
void to_json(Json& j, const EpisodeTrace& t);
void from_json(const Json& j, EpisodeTrace& t);

struct PreviousObjective {
  std::vector<Action> actions;
  double reward = 0.0;
};

struct PolicyRequest {
  const AgentState* state = nullptr;
  const Goal* goal = nullptr;
  const TileLegend* legend = nullptr;
  std::optional<PreviousObjective> previous;       // absent for the first objective
  const std::vector<EpisodeTrace>* prior_episodes = nullptr;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual ActionList act(const PolicyRequest& request) = 0;
};

// Prompts the agent_actions template through an LLM session.
class LlmPolicy : public Policy {
 public:
  explicit LlmPolicy(LlmSession& session) : session_(session) {}
  ActionList act(const PolicyRequest& request) override;

  // The rendered prompt context, exposed for inspection.
  static PromptContext context_for(const PolicyRequest& request, const TemplateStore& templates);

 private:
  LlmSession& session_;
};

class ScriptedPolicy : public Policy {
 public:
  using Script = std::function<std::vector<Action>(const PolicyRequest&)>;
  explicit ScriptedPolicy(Script script) : script_(std::move(script)) {}
  ActionList act(const PolicyRequest& request) override { return {script_(request), {}}; }

 private:
  Script script_;
};

// Plays one episode: one policy request per goal, in index order. Goals must
// all have positions.
EpisodeTrace run_episode(const WorldGrid& world, const std::vector<Goal>& goals, const TileLegend& legend,
                         Symbol protagonist, Policy& policy, const std::vector<EpisodeTrace>& prior_traces);

// Sequential episodes, each seeing every earlier trace.
std::vector<EpisodeTrace> run_episodes(const WorldGrid& world, const std::vector<Goal>& goals,
                                       const TileLegend& legend, Symbol protagonist, Policy& policy, int episodes);

std::vector<double> reward_experiment(const WorldGrid& world, const std::vector<Goal>& goals,
                                      const TileLegend& legend, Symbol protagonist, Policy& policy, int episodes);

}  // namespace w2w
