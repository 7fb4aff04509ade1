#include "w2w/agent.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>

#include "w2w/errors.hpp"
#include "w2w/eval.hpp"
#include "w2w/text.hpp"

namespace w2w {

std::string action_name(Action a) {
  switch (a) {
    case Action::MoveUp: return "move up";
    case Action::MoveDown: return "move down";
    case Action::MoveLeft: return "move left";
    case Action::MoveRight: return "move right";
    case Action::PickObject: return "pick object";
    case Action::HitEnemy: return "hit enemy";
  }
  return "?";
}

std::optional<Action> parse_action(std::string_view token) {
  std::string key;
  for (char c : token) {
    if (c == ' ' || c == '_' || c == '-' || c == '\t') continue;
    key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  for (Action a : kAllActions) {
    std::string canon;
    for (char c : action_name(a)) {
      if (c != ' ') canon += c;
    }
    if (key == canon) return a;
  }
  return std::nullopt;
}

ActionList parse_action_list(std::string_view text) {
  const auto blocks = fenced_blocks(text);
  if (blocks.empty()) throw ParseFailure("expected the actions inside a fenced ``` block");
  ActionList out;
  std::string body = blocks.back().body;
  std::replace(body.begin(), body.end(), ',', '\n');
  for (const auto& line : split_lines(body)) {
    auto token = trim(line);
    // Tolerate list markers such as "1." or "-".
    while (!token.empty() && (std::isdigit(static_cast<unsigned char>(token.front())) || token.front() == '.' ||
                              token.front() == '-' || token.front() == '*' || token.front() == ')')) {
      token.erase(token.begin());
    }
    token = trim(token);
    if (token.empty()) continue;
    const auto a = parse_action(token);
    if (!a) {
      out.warnings.push_back("skipped unknown action '" + token + "'");
      continue;
    }
    if (out.actions.size() == kMaxActionsPerObjective) {
      out.warnings.push_back("action list truncated to cap " + std::to_string(kMaxActionsPerObjective));
      break;
    }
    out.actions.push_back(*a);
  }
  return out;
}

AgentState initial_state(const WorldGrid& world, const TileLegend& legend, Symbol protagonist) {
  const auto pos = locate_symbol(world, protagonist);
  if (!pos) throw MissingProtagonist(std::string("protagonist '") + protagonist + "' is not in the world");
  AgentState s;
  s.position = *pos;
  s.world = world;
  s.avatar = protagonist;
  s.world.set(*pos, fill_symbol(world, legend));
  return s;
}

std::set<Symbol> agent_passable(const TileLegend& legend, const std::vector<Goal>& goals) {
  auto p = legend.walkable;
  for (const auto& g : goals) p.insert(g.target_symbol);
  return p;
}

std::string agent_view(const AgentState& state) {
  WorldGrid view = state.world;
  view.set(state.position, state.avatar);
  return view.to_text();
}

AgentState step(const AgentState& state, Action action, const TileLegend& legend, const std::vector<Goal>& goals) {
  AgentState next = state;
  const Goal* goal = state.current_goal < goals.size() ? &goals[state.current_goal] : nullptr;
  const bool open = goal && goal->position && !state.completed_goals.contains(goal->index);

  auto move = [&](int dr, int dc) {
    const Cell target{state.position.row + dr, state.position.col + dc};
    if (!next.world.in_bounds(target)) return;
    if (!agent_passable(legend, goals).contains(next.world.at(target))) return;
    next.position = target;
    if (open && goal->target_kind == GoalKind::ReachTile && target == *goal->position) {
      next.completed_goals.insert(goal->index);
    }
  };
  auto interact = [&](GoalKind kind) {
    if (!open || goal->target_kind != kind) return;
    const Cell g = *goal->position;
    if (std::abs(g.row - state.position.row) + std::abs(g.col - state.position.col) > 1) return;
    next.completed_goals.insert(goal->index);
    next.world.set(g, fill_symbol(next.world, legend));
  };

  switch (action) {
    case Action::MoveUp: move(-1, 0); break;
    case Action::MoveDown: move(1, 0); break;
    case Action::MoveLeft: move(0, -1); break;
    case Action::MoveRight: move(0, 1); break;
    case Action::PickObject: interact(GoalKind::PickObject); break;
    case Action::HitEnemy: interact(GoalKind::HitEnemy); break;
  }
  return next;
}

double objective_reward(int d_start, int d_end, bool completed) {
  if (d_start < 0 || d_end < 0) throw PreconditionError("distances must be non-negative");
  if (completed) return 1.0;
  const double scale = std::max(d_start, 1);
  if (d_end <= d_start) return (d_start - d_end) / scale;
  // Linear regret up to half the starting distance, then a 1/t tail with
  // matching slope that approaches -1 without reaching it.
  const double t = (d_end - d_start) / scale;
  if (t <= 0.5) return -t;
  return -(1.0 - 0.25 / t);
}

int agent_distance(const AgentState& state, const Goal& goal, const std::set<Symbol>& passable) {
  const auto& w = state.world;
  SearchProblem p{w, passable, state.position, *goal.position};
  const auto r = astar(p, w.height() * w.width() + 1);
  if (!r.path) return 2 * (w.height() + w.width());
  const int interaction = goal.target_kind == GoalKind::ReachTile ? 0 : 1;
  return static_cast<int>(r.path->size()) - 1 + interaction;
}

void to_json(Json& j, const ObjectiveTrace& t) {
  Json actions = Json::array();
  for (Action a : t.actions) actions.push_back(action_name(a));
  j = Json{{"goal_index", t.goal_index}, {"actions", actions}, {"reward", t.reward}, {"completed", t.completed}};
  if (!t.warnings.empty()) j["warnings"] = t.warnings;
}

void from_json(const Json& j, ObjectiveTrace& t) {
  t = ObjectiveTrace{};
  t.goal_index = j.at("goal_index").get<int>();
  for (const auto& a : j.at("actions")) {
    const auto parsed = parse_action(a.get<std::string>());
    if (!parsed) throw ParseFailure("unknown action '" + a.get<std::string>() + "' in trace");
    t.actions.push_back(*parsed);
  }
  t.reward = j.at("reward").get<double>();
  t.completed = j.at("completed").get<bool>();
  if (j.contains("warnings")) t.warnings = j.at("warnings").get<Warnings>();
}

void to_json(Json& j, const EpisodeTrace& t) {
  j = Json{{"episode_reward", t.episode_reward}, {"objectives", t.per_objective}};
}

void from_json(const Json& j, EpisodeTrace& t) {
  t.episode_reward = j.at("episode_reward").get<double>();
  t.per_objective = j.at("objectives").get<std::vector<ObjectiveTrace>>();
}

namespace {

std::string format_reward(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", r);
  return buf;
}

std::string format_cell(Cell c) { return "(row " + std::to_string(c.row) + ", col " + std::to_string(c.col) + ")"; }

std::string join_actions(const std::vector<Action>& actions) {
  if (actions.empty()) return "(none)";
  std::vector<std::string> names;
  for (Action a : actions) names.push_back(action_name(a));
  return join(names, ", ");
}

}  // namespace

PromptContext LlmPolicy::context_for(const PolicyRequest& req, const TemplateStore& templates) {
  const auto& goal = *req.goal;
  std::string history;
  if (req.prior_episodes) {
    for (std::size_t e = 0; e < req.prior_episodes->size(); ++e) {
      const auto& ep = (*req.prior_episodes)[e];
      std::vector<std::string> lines;
      for (const auto& o : ep.per_objective) {
        lines.push_back("objective " + std::to_string(o.goal_index) + ": " + join_actions(o.actions) + " (reward " +
                        format_reward(o.reward) + (o.completed ? ", completed)" : ")"));
      }
      history += "\n" + templates.render("agent_episode", {{"episode", std::to_string(e + 1)},
                                                           {"reward", format_reward(ep.episode_reward)},
                                                           {"actions", join(lines, "\n")}});
    }
  }
  if (req.previous) {
    history += "\n" + templates.render("agent_previous", {{"actions", join_actions(req.previous->actions)},
                                                          {"reward", format_reward(req.previous->reward)}});
  }
  return PromptContext{
      {"world", agent_view(*req.state)},
      {"tile_mapping", serialize_tile_mapping(*req.legend)},
      {"walkable_tiles", serialize_symbols(req.legend->walkable, *req.legend)},
      {"position", format_cell(req.state->position)},
      {"objective", goal.description + " (" + std::string(to_string(goal.target_kind)) + ", tile '" +
                        std::string(1, goal.target_symbol) + "')"},
      {"objective_position", goal.position ? format_cell(*goal.position) : "unknown"},
      {"history", history},
  };
}

ActionList LlmPolicy::act(const PolicyRequest& request) {
  const auto ctx = context_for(request, session_.templates());
  try {
    auto r = run_step<ActionList>(session_, ExtractionStep::AgentActions, ctx,
                                  [](std::string_view t, Warnings&) { return parse_action_list(t); });
    return std::move(r.value);
  } catch (const ParseFailure& e) {
    throw ActionParseFailure(e.what());
  }
}

EpisodeTrace run_episode(const WorldGrid& world, const std::vector<Goal>& goals, const TileLegend& legend,
                         Symbol protagonist, Policy& policy, const std::vector<EpisodeTrace>& prior_traces) {
  if (goals.empty()) throw PreconditionError("an episode needs at least one goal");
  auto ordered = goals;
  std::sort(ordered.begin(), ordered.end(), [](const Goal& a, const Goal& b) { return a.index < b.index; });
  for (const auto& g : ordered) {
    if (!g.position) throw PreconditionError("goal " + std::to_string(g.index) + " has no position");
  }
  const auto passable = agent_passable(legend, ordered);
  AgentState state = initial_state(world, legend, protagonist);

  EpisodeTrace trace;
  std::optional<PreviousObjective> previous;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto& goal = ordered[i];
    state.current_goal = i;
    const int d_start = agent_distance(state, goal, passable);

    PolicyRequest req{&state, &goal, &legend, previous, prior_traces.empty() ? nullptr : &prior_traces};
    auto plan = policy.act(req);

    if (goal.target_kind == GoalKind::ReachTile && state.position == *goal.position) {
      state.completed_goals.insert(goal.index);
    }
    for (Action a : plan.actions) {
      if (state.completed_goals.contains(goal.index)) break;
      state = step(state, a, legend, ordered);
    }
    const bool completed = state.completed_goals.contains(goal.index);
    const int d_end = agent_distance(state, goal, passable);

    ObjectiveTrace o;
    o.goal_index = goal.index;
    o.actions = plan.actions;
    o.completed = completed;
    o.reward = objective_reward(d_start, d_end, completed);
    o.warnings = std::move(plan.warnings);
    previous = PreviousObjective{o.actions, o.reward};
    trace.per_objective.push_back(std::move(o));
  }
  const double sum = std::accumulate(trace.per_objective.begin(), trace.per_objective.end(), 0.0,
                                     [](double acc, const ObjectiveTrace& o) { return acc + o.reward; });
  trace.episode_reward = sum / static_cast<double>(trace.per_objective.size());
  return trace;
}

std::vector<EpisodeTrace> run_episodes(const WorldGrid& world, const std::vector<Goal>& goals,
                                       const TileLegend& legend, Symbol protagonist, Policy& policy, int episodes) {
  if (episodes < 1) throw PreconditionError("episodes must be >= 1");
  std::vector<EpisodeTrace> traces;
  for (int e = 0; e < episodes; ++e) traces.push_back(run_episode(world, goals, legend, protagonist, policy, traces));
  return traces;
}

std::vector<double> reward_experiment(const WorldGrid& world, const std::vector<Goal>& goals,
                                      const TileLegend& legend, Symbol protagonist, Policy& policy, int episodes) {
  std::vector<double> out;
  for (const auto& t : run_episodes(world, goals, legend, protagonist, policy, episodes)) {
    out.push_back(t.episode_reward);
  }
  return out;
}

}  // namespace w2w
