#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "w2w/agent.hpp"
#include "w2w/eval.hpp"
#include "w2w/extraction.hpp"
#include "w2w/llm.hpp"
#include "w2w/tiles.hpp"
#include "w2w/worldmodel.hpp"

namespace w2w {

enum class RunMode { Full, DirectGeneration, NoGoals, NoImportantTiles, OneStep, OneRound };

// CLI spellings: full, direct, no-goals, no-important, one-step, one-round.
std::string mode_name(RunMode m);
RunMode parse_mode(std::string_view s);

enum class EmbedderKind { BagOfWords, Remote };

struct RunConfig {
  int story_paragraphs_min = 4;
  int story_paragraphs_max = 5;
  int objective_count = 8;
  int important_tile_cap = 15;
  int rounds = 3;
  int completion_try_budget = 10;
  double novelty_threshold = kDefaultNoveltyThreshold;
  int astar_iteration_budget = kDefaultAStarBudget;
  int agent_episodes = 2;
  RunMode mode = RunMode::Full;
  std::uint64_t seed = 0;
  ProviderConfig provider;
  std::string env_tileset;   // manifest paths
  std::string char_tileset;
  EmbedderKind embedder = EmbedderKind::BagOfWords;
  RemoteEmbedderConfig remote_embedder;
  int reprompt_budget = 3;
  bool any_order = false;
  bool best_of = false;
  bool coherence_judge = true;
  std::string template_dir;  // empty: default_template_dir()
  std::string output_root = "runs";
  std::string run_id;        // empty: derived from mode and seed
  std::string script_path;   // recorded only, for mock runs

  // Throws PreconditionError on out-of-range values.
  void validate() const;
  std::string effective_run_id() const;
};

// Echoed into config.json; never contains secrets or the output root.
Json config_to_json(const RunConfig& c);

struct StepPlan {
  bool story = true;
  bool characters = true;
  bool tileset = true;
  bool goals = true;
  bool important_tiles = true;
  bool walkable_tiles = true;
  bool object_tiles = true;
  bool world_environment = true;
  bool direct = false;
  std::string world_template = "world_full";
  int rounds = 3;

  // Generation steps in the order they are prompted.
  std::vector<ExtractionStep> generation_steps() const;
};

StepPlan apply_mode(const RunConfig& config);

struct RoundRecord {
  int round_index = 0;
  WorldGrid environment_grid;
  WorldGrid world_grid;
  std::vector<Goal> goals;  // with positions found in this round's world
  EvaluationReport evaluation;
  std::vector<std::string> raw_llm_outputs;
  Warnings notes;
};

struct RunArtifact {
  RunConfig config;
  StoryPackage story_package;
  std::vector<Symbol> important_tiles;
  std::vector<Symbol> walkable_tiles;
  std::vector<Symbol> object_tiles;
  std::vector<RoundRecord> round_records;
  std::optional<WorldGrid> final_world;
  std::optional<int> final_round;
  std::map<Symbol, int> tile_assignment;
  std::string rendered_image_path;  // relative to run_dir
  std::vector<EpisodeTrace> agent_traces;
  bool completed = false;
  int tries_used = 0;
  std::vector<std::string> failures;  // one entry per consumed try
  Warnings warnings;
  std::string run_dir;
  std::string transcript_jsonl;
};

// Every goal's position is taken from the model when that cell holds the
// target symbol, else from the first occurrence of the symbol (with a
// warning). Throws GoalUnplaceable when a target is missing from the grid.
std::vector<Goal> extract_goal_positions(const WorldGrid& world, const std::vector<Goal>& goals,
                                         const TileLegend& legend, LlmSession& session, Warnings& warnings);

// Same check without a model reply; positions the model gave are in `proposed`.
std::vector<Goal> resolve_goal_positions(const WorldGrid& world, const std::vector<Goal>& goals,
                                         const std::map<int, Cell>& proposed, Warnings& warnings);

// Executes the whole pipeline and writes the artifact directory
// <output_root>/<run_id>. Budget exhaustion is reported in the artifact;
// DatasetError, AuthError and PreconditionError propagate.
RunArtifact run(const RunConfig& config);

void persist_artifact(const RunArtifact& artifact);
Json summary_json(const RunArtifact& artifact);

}  // namespace w2w
