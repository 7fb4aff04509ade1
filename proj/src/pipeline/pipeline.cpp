#include "w2w/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <memory>

#include "w2w/errors.hpp"
#include "w2w/json_io.hpp"
#include "w2w/text.hpp"

namespace w2w {

std::string mode_name(RunMode m) {
  switch (m) {
    case RunMode::Full: return "full";
    case RunMode::DirectGeneration: return "direct";
    case RunMode::NoGoals: return "no-goals";
    case RunMode::NoImportantTiles: return "no-important";
    case RunMode::OneStep: return "one-step";
    case RunMode::OneRound: return "one-round";
  }
  return "full";
}

RunMode parse_mode(std::string_view s) {
  auto v = to_lower(trim(s));
  std::replace(v.begin(), v.end(), '_', '-');
  for (RunMode m : {RunMode::Full, RunMode::DirectGeneration, RunMode::NoGoals, RunMode::NoImportantTiles,
                    RunMode::OneStep, RunMode::OneRound}) {
    if (v == mode_name(m)) return m;
  }
  if (v == "direct-generation") return RunMode::DirectGeneration;
  if (v == "no-important-tiles") return RunMode::NoImportantTiles;
  throw PreconditionError("unknown mode '" + std::string(s) + "'");
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw PreconditionError(what);
  };
  require(story_paragraphs_min >= 1 && story_paragraphs_max >= story_paragraphs_min,
          "story paragraph range must be positive and ordered");
  require(objective_count >= 1, "objective_count must be >= 1");
  require(important_tile_cap >= 1, "important_tile_cap must be >= 1");
  require(rounds >= 1, "rounds must be >= 1");
  require(completion_try_budget >= 1, "completion_try_budget must be >= 1");
  require(novelty_threshold > 0, "novelty_threshold must be > 0");
  require(astar_iteration_budget >= 1, "astar_iteration_budget must be >= 1");
  require(agent_episodes >= 0, "agent_episodes must be >= 0");
  require(reprompt_budget >= 0, "reprompt_budget must be >= 0");
}

std::string RunConfig::effective_run_id() const {
  return run_id.empty() ? mode_name(mode) + "-seed" + std::to_string(seed) : run_id;
}

Json config_to_json(const RunConfig& c) {
  Json provider{{"kind", std::string(to_string(c.provider.kind))},
                {"model_name", c.provider.model_name},
                {"endpoint_url", c.provider.endpoint_url},
                {"api_key_env_var", c.provider.api_key_env_var},
                {"request_timeout_ms", c.provider.request_timeout.count()},
                {"max_retries_per_call", c.provider.max_retries_per_call}};
  if (!c.script_path.empty()) provider["script"] = c.script_path;
  Json embedder{{"kind", c.embedder == EmbedderKind::Remote ? "remote" : "bag-of-words"}};
  if (c.embedder == EmbedderKind::Remote) {
    embedder["endpoint_url"] = c.remote_embedder.endpoint_url;
    embedder["model_name"] = c.remote_embedder.model_name;
    embedder["api_key_env_var"] = c.remote_embedder.api_key_env_var;
  }
  return Json{{"run_id", c.effective_run_id()},
              {"mode", mode_name(c.mode)},
              {"seed", c.seed},
              {"story_paragraphs", {c.story_paragraphs_min, c.story_paragraphs_max}},
              {"objective_count", c.objective_count},
              {"important_tile_cap", c.important_tile_cap},
              {"rounds", apply_mode(c).rounds},
              {"completion_try_budget", c.completion_try_budget},
              {"novelty_threshold", c.novelty_threshold},
              {"astar_iteration_budget", c.astar_iteration_budget},
              {"agent_episodes", c.agent_episodes},
              {"reprompt_budget", c.reprompt_budget},
              {"any_order", c.any_order},
              {"best_of", c.best_of},
              {"coherence_judge", c.coherence_judge},
              {"tilesets", {{"environment", c.env_tileset}, {"character", c.char_tileset}}},
              {"embedder", embedder},
              {"provider", provider}};
}

std::vector<ExtractionStep> StepPlan::generation_steps() const {
  std::vector<ExtractionStep> out;
  if (story) out.push_back(ExtractionStep::Story);
  if (characters) out.push_back(ExtractionStep::Characters);
  if (tileset) out.push_back(ExtractionStep::Tileset);
  if (goals) out.push_back(ExtractionStep::Goals);
  if (important_tiles) out.push_back(ExtractionStep::ImportantTiles);
  if (walkable_tiles) out.push_back(ExtractionStep::WalkableTiles);
  if (object_tiles) out.push_back(ExtractionStep::ObjectTiles);
  if (world_environment) out.push_back(ExtractionStep::WorldEnvironment);
  out.push_back(ExtractionStep::WorldFull);
  return out;
}

StepPlan apply_mode(const RunConfig& config) {
  StepPlan p;
  p.rounds = config.rounds;
  switch (config.mode) {
    case RunMode::Full: break;
    case RunMode::DirectGeneration:
      p.characters = p.tileset = p.goals = false;
      p.important_tiles = p.walkable_tiles = p.object_tiles = false;
      p.world_environment = false;
      p.direct = true;
      p.world_template = "world_direct";
      break;
    case RunMode::NoGoals: p.goals = false; break;
    case RunMode::NoImportantTiles: p.important_tiles = p.walkable_tiles = p.object_tiles = false; break;
    case RunMode::OneStep:
      p.world_environment = false;
      p.world_template = "world_full_one_step";
      break;
    case RunMode::OneRound: p.rounds = 1; break;
  }
  return p;
}

std::vector<Goal> resolve_goal_positions(const WorldGrid& world, const std::vector<Goal>& goals,
                                         const std::map<int, Cell>& proposed, Warnings& warnings) {
  std::vector<Goal> out = goals;
  for (auto& g : out) {
    const auto it = proposed.find(g.index);
    if (it != proposed.end() && world.in_bounds(it->second) && world.at(it->second) == g.target_symbol) {
      g.position = it->second;
      continue;
    }
    const auto found = locate_symbol(world, g.target_symbol);
    if (!found) {
      throw GoalUnplaceable("objective " + std::to_string(g.index) + " targets '" + std::string(1, g.target_symbol) +
                            "', which is not in the world");
    }
    if (it != proposed.end()) {
      warnings.push_back("objective " + std::to_string(g.index) + ": proposed (" + std::to_string(it->second.row) +
                         "," + std::to_string(it->second.col) + ") does not hold '" + g.target_symbol +
                         "'; using (" + std::to_string(found->row) + "," + std::to_string(found->col) + ")");
    } else {
      warnings.push_back("objective " + std::to_string(g.index) + ": no position proposed; using (" +
                         std::to_string(found->row) + "," + std::to_string(found->col) + ")");
    }
    g.position = found;
  }
  return out;
}

std::vector<Goal> extract_goal_positions(const WorldGrid& world, const std::vector<Goal>& goals,
                                         const TileLegend& legend, LlmSession& session, Warnings& warnings) {
  const PromptContext ctx{
      {"tile_mapping", serialize_tile_mapping(legend)}, {"world", world.to_text()}, {"goals", serialize_goals(goals)}};
  const auto proposed = run_step<std::map<int, Cell>>(session, ExtractionStep::GoalPositions, ctx,
                                                      [](std::string_view t, Warnings&) {
                                                        return parse_goal_positions(t);
                                                      })
                            .value;
  return resolve_goal_positions(world, goals, proposed, warnings);
}

namespace {

constexpr const char* kNotExtracted = "(not extracted in this run)";

struct BudgetExhausted {};

std::set<Symbol> as_set(const std::vector<Symbol>& v) { return {v.begin(), v.end()}; }

ParsedGrid grid_or_parse_failure(std::string_view text, const TileLegend& legend) {
  try {
    return parse_grid(text, legend);
  } catch (const NoGridFound& e) {
    throw ParseFailure(e.what());
  }
}

class Runner {
 public:
  explicit Runner(const RunConfig& config)
      : plan_(apply_mode(config)),
        session_(config.provider, TemplateStore(config.template_dir.empty() ? default_template_dir() : config.template_dir),
                 config.provider.kind == ProviderKind::Mock ? logical_clock() : system_clock_iso(),
                 config.reprompt_budget) {
    art_.config = config;
    art_.run_dir = (std::filesystem::path(config.output_root) / config.effective_run_id()).string();
  }

  RunArtifact go() {
    const auto& cfg = art_.config;
    // Tile data first, so a bad path fails before any model traffic.
    env_tiles_ = load_dataset(cfg.env_tileset, TileCategory::Environment);
    char_tiles_ = load_dataset(cfg.char_tileset, TileCategory::Character);
    if (cfg.embedder == EmbedderKind::Remote) {
      embedder_ = std::make_unique<RemoteEmbedder>(cfg.remote_embedder);
    } else {
      embedder_ = std::make_unique<BagOfWordsEmbedder>();
    }

    try {
      extract();
      for (int i = 0; i < plan_.rounds; ++i) generate_round(i);
      finish();
      art_.completed = true;
    } catch (const BudgetExhausted&) {
      art_.completed = false;
    }
    const int budget = cfg.completion_try_budget;
    art_.tries_used = std::min(budget, 1 + static_cast<int>(art_.failures.size()));
    art_.transcript_jsonl = session_.transcript_jsonl();
    persist_artifact(art_);
    if (!art_.rendered_image_path.empty()) {
      write_png(image_, (std::filesystem::path(art_.run_dir) / art_.rendered_image_path).string());
    }
    return art_;
  }

 private:
  // Runs one stage, consuming a completion try per recoverable failure and
  // retrying the same stage until it succeeds or the budget is spent.
  void stage(const std::string& name, const std::function<void()>& body) {
    session_.set_label(name);
    for (;;) {
      std::string error;
      try {
        body();
        return;
      } catch (const ParseFailure& e) {
        error = e.what();
      } catch (const ActionParseFailure& e) {
        error = e.what();
      } catch (const ScriptExhausted& e) {
        error = e.what();
      } catch (const TransportError& e) {
        error = e.what();
      } catch (const RateLimited& e) {
        error = e.what();
      }
      art_.failures.push_back(name + ": " + error);
      if (static_cast<int>(art_.failures.size()) >= art_.config.completion_try_budget) throw BudgetExhausted{};
    }
  }

  void note(const std::string& where, const Warnings& w) {
    for (const auto& s : w) art_.warnings.push_back(where + ": " + s);
  }

  PromptContext context() const {
    const auto& pkg = art_.story_package;
    const auto& legend = pkg.legend;
    auto symbols_or_marker = [&](bool extracted, const std::set<Symbol>& s) {
      return extracted ? serialize_symbols(s, legend) : std::string(kNotExtracted);
    };
    const auto& cfg = art_.config;
    const std::string paragraphs = cfg.story_paragraphs_min == cfg.story_paragraphs_max
                                       ? std::to_string(cfg.story_paragraphs_min)
                                       : std::to_string(cfg.story_paragraphs_min) + "-" +
                                             std::to_string(cfg.story_paragraphs_max);
    return PromptContext{
        {"paragraphs", paragraphs},
        {"objective_count", std::to_string(cfg.objective_count)},
        {"important_cap", std::to_string(cfg.important_tile_cap)},
        {"story", pkg.story_text},
        {"characters", plan_.characters ? serialize_characters(pkg.characters) : kNotExtracted},
        {"tile_mapping", plan_.tileset ? serialize_tile_mapping(legend) : kNotExtracted},
        {"goals", plan_.goals ? serialize_goals(pkg.goals) : kNotExtracted},
        {"important_tiles", symbols_or_marker(plan_.important_tiles, legend.important)},
        {"walkable_tiles", symbols_or_marker(plan_.walkable_tiles, legend.walkable)},
        {"object_tiles", symbols_or_marker(plan_.object_tiles, legend.interactive)},
        {"feedback", ""},
    };
  }

  void extract() {
    auto& pkg = art_.story_package;
    const auto& cfg = art_.config;
    stage("story", [&] {
      auto r = run_step<std::string>(session_, ExtractionStep::Story, context(), parse_story);
      pkg.story_text = r.value;
      note("story", r.warnings);
    });
    pkg.paragraph_count = count_paragraphs(pkg.story_text);
    if (pkg.paragraph_count < cfg.story_paragraphs_min || pkg.paragraph_count > cfg.story_paragraphs_max) {
      art_.warnings.push_back("story: " + std::to_string(pkg.paragraph_count) + " paragraphs, asked for " +
                              std::to_string(cfg.story_paragraphs_min) + "-" +
                              std::to_string(cfg.story_paragraphs_max));
    }
    if (plan_.direct) return;

    std::vector<CharacterInfo> characters;
    stage("characters", [&] {
      auto r = run_step<std::vector<CharacterInfo>>(session_, ExtractionStep::Characters, context(), parse_characters);
      characters = r.value;
      note("characters", r.warnings);
    });
    pkg.characters = characters;
    stage("tileset", [&] {
      auto r = run_step<TilesetExtraction>(session_, ExtractionStep::Tileset, context(),
                                           [&](std::string_view t, Warnings& w) { return parse_tileset(t, characters, w); });
      pkg.legend = r.value.legend;
      pkg.characters = r.value.characters;
      note("tileset", r.warnings);
    });
    if (plan_.goals) {
      stage("goals", [&] {
        auto r = run_step<std::vector<Goal>>(session_, ExtractionStep::Goals, context(), [&](std::string_view t, Warnings& w) {
          return parse_goals(t, pkg.legend, cfg.objective_count, w);
        });
        pkg.goals = r.value;
        note("goals", r.warnings);
      });
    }
    if (plan_.important_tiles) {
      symbol_stage("important_tiles", ExtractionStep::ImportantTiles, static_cast<std::size_t>(cfg.important_tile_cap),
                   art_.important_tiles);
      pkg.legend.important = {art_.important_tiles.begin(), art_.important_tiles.end()};
    }
    if (plan_.walkable_tiles) {
      symbol_stage("walkable_tiles", ExtractionStep::WalkableTiles, std::nullopt, art_.walkable_tiles);
      std::erase_if(art_.walkable_tiles, [&](Symbol s) {
        if (!pkg.legend.is_character(s)) return false;
        art_.warnings.push_back(std::string("walkable_tiles: dropped character symbol '") + s + "'");
        return true;
      });
      pkg.legend.walkable = {art_.walkable_tiles.begin(), art_.walkable_tiles.end()};
    } else {
      use_all_environment_as_walkable();
    }
    if (plan_.object_tiles) {
      symbol_stage("object_tiles", ExtractionStep::ObjectTiles, std::nullopt, art_.object_tiles);
      pkg.legend.interactive = {art_.object_tiles.begin(), art_.object_tiles.end()};
    }
    pkg.legend.validate(static_cast<std::size_t>(cfg.important_tile_cap));
  }

  void symbol_stage(const std::string& name, ExtractionStep step, std::optional<std::size_t> cap,
                    std::vector<Symbol>& out) {
    stage(name, [&] {
      auto r = run_step<std::vector<Symbol>>(session_, step, context(), [&](std::string_view t, Warnings& w) {
        return parse_symbol_list(t, name, art_.story_package.legend, cap, w);
      });
      out = r.value;
      note(name, r.warnings);
    });
  }

  // Without a walkable extraction every non-character tile is treated as
  // walkable so the world can still be evaluated.
  void use_all_environment_as_walkable() {
    auto& legend = art_.story_package.legend;
    legend.walkable.clear();
    for (const auto& [s, d] : legend.entries) {
      if (!legend.is_character(s)) legend.walkable.insert(s);
    }
  }

  std::string feedback_for(int round) const {
    if (round == 0) return "";
    const auto& prev = art_.round_records.back();
    return session_.templates().render("feedback", {{"round", std::to_string(prev.round_index)},
                                                    {"previous_world", prev.world_grid.to_text()},
                                                    {"previous_evaluation", dump_json(Json(prev.evaluation))}});
  }

  void generate_round(int i) {
    auto& pkg = art_.story_package;
    const auto& cfg = art_.config;
    RoundRecord rec;
    rec.round_index = i;
    const std::size_t first_exchange = session_.transcript().size();
    const std::string tag = "round " + std::to_string(i);
    auto ctx = context();
    ctx["feedback"] = feedback_for(i);

    WorldGrid raw;
    if (plan_.direct) {
      stage("world_direct " + tag, [&] {
        auto r = run_step<DirectWorld>(session_, ExtractionStep::WorldFull, ctx, parse_direct_world, "world_direct");
        pkg.legend = r.value.legend;
        pkg.characters = r.value.characters;
        raw = r.value.grid.grid;
        note("world_direct " + tag, r.warnings);
        note("world_direct " + tag, r.value.grid.warnings);
      });
      rec.environment_grid = raw;
    } else {
      if (plan_.world_environment) {
        stage("world_environment " + tag, [&] {
          auto r = run_step<ParsedGrid>(session_, ExtractionStep::WorldEnvironment, ctx,
                                        [&](std::string_view t, Warnings&) { return grid_or_parse_failure(t, pkg.legend); });
          rec.environment_grid = r.value.grid;
          note("world_environment " + tag, r.value.warnings);
        });
        ctx["world_environment"] = rec.environment_grid.to_text();
      }
      stage("world_full " + tag, [&] {
        auto r = run_step<ParsedGrid>(
            session_, ExtractionStep::WorldFull, ctx,
            [&](std::string_view t, Warnings&) { return grid_or_parse_failure(t, pkg.legend); }, plan_.world_template);
        raw = r.value.grid;
        note("world_full " + tag, r.value.warnings);
      });
      if (!plan_.world_environment) rec.environment_grid = raw;
    }
    rec.world_grid = algorithmic_fixes(raw, pkg.legend);

    rec.goals = pkg.goals;
    if (!pkg.goals.empty()) {
      stage("goal_positions " + tag, [&] {
        try {
          Warnings w;
          rec.goals = extract_goal_positions(rec.world_grid, pkg.goals, pkg.legend, session_, w);
          for (const auto& s : w) rec.notes.push_back(s);
        } catch (const GoalUnplaceable& e) {
          rec.goals = pkg.goals;
          rec.notes.push_back(e.what());
        }
      });
    }

    std::vector<WorldGrid> prior;
    for (const auto& r : art_.round_records) prior.push_back(r.world_grid);
    StoryPackage round_pkg = pkg;
    round_pkg.goals = rec.goals;
    EvalSettings settings;
    settings.astar_budget = cfg.astar_iteration_budget;
    settings.novelty_threshold = cfg.novelty_threshold;
    settings.order = cfg.any_order ? ObjectiveOrder::NearestFirst : ObjectiveOrder::Story;
    rec.evaluation = evaluate_world(rec.world_grid, round_pkg, prior, settings, nullptr, rec.notes);
    if (cfg.coherence_judge) {
      stage("coherence " + tag, [&] {
        rec.evaluation.coherence = coherence_judge(pkg.story_text, pkg.legend, rec.world_grid, session_);
      });
    }

    const auto& tx = session_.transcript();
    for (std::size_t k = first_exchange; k < tx.size(); ++k) {
      if (tx[k].error.empty()) rec.raw_llm_outputs.push_back(tx[k].response);
    }
    art_.round_records.push_back(std::move(rec));
  }

  void finish() {
    auto& pkg = art_.story_package;
    const auto& cfg = art_.config;
    std::size_t pick = art_.round_records.size() - 1;
    if (cfg.best_of) {
      for (std::size_t k = art_.round_records.size(); k-- > 0;) {
        if (art_.round_records[k].evaluation.playable) {
          pick = k;
          break;
        }
      }
    }
    auto& final_rec = art_.round_records[pick];
    art_.final_round = static_cast<int>(pick);
    art_.final_world = final_rec.world_grid;

    const auto* hero = pkg.protagonist();
    const bool positioned = !final_rec.goals.empty() &&
                            std::all_of(final_rec.goals.begin(), final_rec.goals.end(),
                                        [](const Goal& g) { return g.position.has_value(); });
    if (cfg.agent_episodes > 0) {
      if (!positioned) {
        art_.warnings.push_back("agent: skipped, objectives have no positions in the final world");
      } else if (!hero || !final_rec.world_grid.contains(hero->symbol)) {
        art_.warnings.push_back("agent: skipped, protagonist is not in the final world");
      } else {
        stage("agent", [&] {
          LlmPolicy policy(session_);
          art_.agent_traces = run_episodes(final_rec.world_grid, final_rec.goals, pkg.legend, hero->symbol, policy,
                                           cfg.agent_episodes);
        });
        final_rec.evaluation.agent_reward = art_.agent_traces.back().episode_reward;
      }
    }

    stage("tiles", [&] {
      Warnings w;
      const auto assignment = assign_tiles(pkg.legend, pkg.characters, env_tiles_, char_tiles_, *embedder_, w);
      note("tiles", w);
      art_.tile_assignment.clear();
      for (const auto& [s, a] : assignment) art_.tile_assignment[s] = a.id;
      image_ = render_world(*art_.final_world, assignment, pkg.legend.interactive);
    });
    art_.rendered_image_path = "world.png";
  }

  StepPlan plan_;
  LlmSession session_;
  RunArtifact art_;
  TileDataset env_tiles_;
  TileDataset char_tiles_;
  std::unique_ptr<Embedder> embedder_;
  Image image_;
};

}  // namespace

Json summary_json(const RunArtifact& a) {
  Json j{{"run_id", a.config.effective_run_id()},
         {"mode", mode_name(a.config.mode)},
         {"completed", a.completed},
         {"tries_used", a.tries_used},
         {"completion_try_budget", a.config.completion_try_budget},
         {"rounds_completed", a.round_records.size()},
         {"failures", a.failures},
         {"warnings", a.warnings}};
  if (a.final_round) {
    j["final_round"] = *a.final_round;
    j["final_evaluation"] = a.round_records[static_cast<std::size_t>(*a.final_round)].evaluation;
  }
  if (!a.agent_traces.empty()) {
    Json rewards = Json::array();
    for (const auto& t : a.agent_traces) rewards.push_back(t.episode_reward);
    j["agent_rewards"] = rewards;
  }
  return j;
}

void persist_artifact(const RunArtifact& a) {
  namespace fs = std::filesystem;
  const fs::path dir(a.run_dir);
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir);
  auto put = [&](const std::string& rel, const std::string& body) { write_file((dir / rel).string(), body); };

  put("config.json", dump_json(config_to_json(a.config)) + "\n");
  const auto& pkg = a.story_package;
  if (!pkg.story_text.empty()) put("story.txt", pkg.story_text + "\n");

  Json ex{{"paragraph_count", pkg.paragraph_count},
          {"characters", pkg.characters},
          {"legend", pkg.legend},
          {"goals", pkg.goals},
          {"important_tiles", symbols_to_json(as_set(a.important_tiles))},
          {"walkable_tiles", symbols_to_json(as_set(a.walkable_tiles))},
          {"object_tiles", symbols_to_json(as_set(a.object_tiles))}};
  put("extractions.json", dump_json(ex) + "\n");

  for (const auto& r : a.round_records) {
    const std::string sub = "round_" + std::to_string(r.round_index) + "/";
    put(sub + "world_env.txt", r.environment_grid.to_text() + "\n");
    put(sub + "world.txt", r.world_grid.to_text() + "\n");
    put(sub + "evals.json", dump_json(Json(r.evaluation)) + "\n");
    put(sub + "notes.json", dump_json(Json{{"goals", r.goals}, {"notes", r.notes}}) + "\n");
  }

  if (!a.tile_assignment.empty()) {
    Json ta = Json::object();
    for (const auto& [s, id] : a.tile_assignment) ta[std::string(1, s)] = id;
    put("tile_assignment.json", dump_json(ta) + "\n");
  }
  if (!a.agent_traces.empty()) {
    Json rewards = Json::array();
    for (const auto& t : a.agent_traces) rewards.push_back(t.episode_reward);
    put("agent_traces.json", dump_json(Json{{"episodes", a.agent_traces}, {"rewards", rewards}}) + "\n");
  }
  put("transcript.jsonl", a.transcript_jsonl);
  put("summary.json", dump_json(summary_json(a)) + "\n");
}

RunArtifact run(const RunConfig& config) {
  config.validate();
  Runner runner(config);
  return runner.go();
}

}  // namespace w2w
