#include "cli.hpp"

#include <CLI11.hpp>
#include <toml.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "w2w/errors.hpp"
#include "w2w/text.hpp"

namespace w2w::cli {

namespace fs = std::filesystem;

namespace {

std::pair<int, int> parse_range(std::string_view text) {
  const auto t = trim(text);
  const auto dash = t.find('-', 1);
  auto to_int = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw PreconditionError("expected an integer or range, got '" + t + "'");
    return v;
  };
  if (dash == std::string::npos) {
    const int v = to_int(t);
    return {v, v};
  }
  return {to_int(trim(t.substr(0, dash))), to_int(trim(t.substr(dash + 1)))};
}

std::string resolve_against(const fs::path& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

int as_int(const toml::node& n, const std::string& key) {
  if (auto v = n.value<std::int64_t>()) return static_cast<int>(*v);
  throw PreconditionError("config key '" + key + "' must be an integer");
}

double as_real(const toml::node& n, const std::string& key) {
  if (auto v = n.value<double>()) return *v;
  throw PreconditionError("config key '" + key + "' must be a number");
}

bool as_bool(const toml::node& n, const std::string& key) {
  if (auto v = n.value<bool>()) return *v;
  throw PreconditionError("config key '" + key + "' must be a boolean");
}

std::string as_string(const toml::node& n, const std::string& key) {
  if (auto v = n.value<std::string>()) return *v;
  throw PreconditionError("config key '" + key + "' must be a string");
}

const toml::table& as_table(const toml::node& n, const std::string& key) {
  if (const auto* t = n.as_table()) return *t;
  throw PreconditionError("config key '" + key + "' must be a table");
}

std::pair<int, int> paragraphs_from(const toml::node& n) {
  if (const auto* arr = n.as_array()) {
    if (arr->size() != 2) throw PreconditionError("story_paragraphs array needs [min, max]");
    return {as_int(*arr->get(0), "story_paragraphs"), as_int(*arr->get(1), "story_paragraphs")};
  }
  if (auto s = n.value<std::string>()) return parse_range(*s);
  const int v = as_int(n, "story_paragraphs");
  return {v, v};
}

void apply_provider_table(const toml::table& t, RunConfig& run, const fs::path& base) {
  if (auto k = t["kind"]) {
    const auto keep_script = run.script_path;
    run.provider = default_provider(parse_provider_kind(as_string(*k.node(), "provider.kind")));
    run.script_path = keep_script;
  }
  for (auto&& [key, node] : t) {
    const std::string k(key.str());
    if (k == "kind") continue;
    if (k == "model_name") run.provider.model_name = as_string(node, k);
    else if (k == "endpoint_url") run.provider.endpoint_url = as_string(node, k);
    else if (k == "api_key_env_var") run.provider.api_key_env_var = as_string(node, k);
    else if (k == "request_timeout_ms") run.provider.request_timeout = std::chrono::milliseconds(as_int(node, k));
    else if (k == "max_retries_per_call") run.provider.max_retries_per_call = as_int(node, k);
    else if (k == "script") run.script_path = resolve_against(base, as_string(node, k));
    else throw PreconditionError("unknown config key 'provider." + k + "'");
  }
}

void apply_embedder_table(const toml::table& t, RunConfig& run) {
  for (auto&& [key, node] : t) {
    const std::string k(key.str());
    if (k == "kind") {
      const auto v = to_lower(as_string(node, k));
      if (v == "remote") run.embedder = EmbedderKind::Remote;
      else if (v == "bag-of-words" || v == "bag_of_words") run.embedder = EmbedderKind::BagOfWords;
      else throw PreconditionError("embedder.kind must be 'bag-of-words' or 'remote'");
    } else if (k == "endpoint_url") {
      run.remote_embedder.endpoint_url = as_string(node, k);
    } else if (k == "model_name") {
      run.remote_embedder.model_name = as_string(node, k);
    } else if (k == "api_key_env_var") {
      run.remote_embedder.api_key_env_var = as_string(node, k);
    } else {
      throw PreconditionError("unknown config key 'embedder." + k + "'");
    }
  }
}

void apply_batch_table(const toml::table& t, CliConfig& c) {
  for (auto&& [key, node] : t) {
    const std::string k(key.str());
    if (k == "runs") c.batch_runs = as_int(node, k);
    else if (k == "workers") c.workers = as_int(node, k);
    else if (k == "coherence_threshold") c.coherence_threshold = as_int(node, k);
    else if (k == "sweep") {
      const auto* arr = node.as_array();
      if (!arr) throw PreconditionError("batch.sweep must be an array of strings");
      c.sweep.clear();
      for (const auto& e : *arr) c.sweep.push_back(parse_sweep_point(as_string(e, "batch.sweep")));
    } else {
      throw PreconditionError("unknown config key 'batch." + k + "'");
    }
  }
}

}  // namespace

SweepPoint parse_sweep_point(std::string_view text) {
  std::vector<std::string> parts;
  std::stringstream ss{std::string(text)};
  for (std::string p; std::getline(ss, p, ',');) parts.push_back(trim(p));
  if (parts.size() != 3) throw PreconditionError("sweep point needs paragraphs,objectives,important_cap");
  SweepPoint s;
  std::tie(s.paragraphs_min, s.paragraphs_max) = parse_range(parts[0]);
  s.objectives = parse_range(parts[1]).first;
  s.important_cap = parse_range(parts[2]).first;
  if (s.paragraphs_min < 1 || s.paragraphs_max < s.paragraphs_min || s.objectives < 1 || s.important_cap < 1) {
    throw PreconditionError("sweep values must be positive");
  }
  return s;
}

std::string sweep_label(const SweepPoint& p) {
  const auto paras = p.paragraphs_min == p.paragraphs_max
                         ? std::to_string(p.paragraphs_min)
                         : std::to_string(p.paragraphs_min) + "-" + std::to_string(p.paragraphs_max);
  return "p" + paras + "_o" + std::to_string(p.objectives) + "_c" + std::to_string(p.important_cap);
}

CliConfig default_config() {
  CliConfig c;
  const char* env = std::getenv("W2W_ASSETS");
  const fs::path assets = env && *env ? fs::path(env) : fs::path(W2W_ASSET_DIR);
  c.run.env_tileset = (assets / "placeholder" / "environment.csv").string();
  c.run.char_tileset = (assets / "placeholder" / "characters.csv").string();
  c.run.provider = default_provider(ProviderKind::Mock);
  return c;
}

CliConfig load_config_file(const std::string& path, CliConfig c) {
  toml::table tbl;
  try {
    tbl = toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e.description() << " (line " << e.source().begin.line << ")";
    throw ParseFailure("config " + path + ": " + os.str());
  }
  const fs::path base = fs::absolute(path).parent_path();
  auto& run = c.run;
  for (auto&& [key, node] : tbl) {
    const std::string k(key.str());
    if (k == "story_paragraphs") std::tie(run.story_paragraphs_min, run.story_paragraphs_max) = paragraphs_from(node);
    else if (k == "objective_count") run.objective_count = as_int(node, k);
    else if (k == "important_tile_cap") run.important_tile_cap = as_int(node, k);
    else if (k == "rounds") run.rounds = as_int(node, k);
    else if (k == "completion_try_budget") run.completion_try_budget = as_int(node, k);
    else if (k == "novelty_threshold") run.novelty_threshold = as_real(node, k);
    else if (k == "astar_iteration_budget") run.astar_iteration_budget = as_int(node, k);
    else if (k == "agent_episodes") run.agent_episodes = as_int(node, k);
    else if (k == "mode") run.mode = parse_mode(as_string(node, k));
    else if (k == "seed") run.seed = static_cast<std::uint64_t>(as_int(node, k));
    else if (k == "reprompt_budget") run.reprompt_budget = as_int(node, k);
    else if (k == "any_order") run.any_order = as_bool(node, k);
    else if (k == "best_of") run.best_of = as_bool(node, k);
    else if (k == "coherence_judge") run.coherence_judge = as_bool(node, k);
    else if (k == "template_dir") run.template_dir = resolve_against(base, as_string(node, k));
    else if (k == "output_root") run.output_root = as_string(node, k);
    else if (k == "run_id") run.run_id = as_string(node, k);
    else if (k == "provider") apply_provider_table(as_table(node, k), run, base);
    else if (k == "embedder") apply_embedder_table(as_table(node, k), run);
    else if (k == "batch") apply_batch_table(as_table(node, k), c);
    else if (k == "tilesets") {
      for (auto&& [tk, tn] : as_table(node, k)) {
        const std::string t(tk.str());
        if (t == "environment") run.env_tileset = resolve_against(base, as_string(tn, "tilesets.environment"));
        else if (t == "character") run.char_tileset = resolve_against(base, as_string(tn, "tilesets.character"));
        else throw PreconditionError("unknown config key 'tilesets." + t + "'");
      }
    } else {
      throw PreconditionError("unknown config key '" + k + "'");
    }
  }
  return c;
}

void attach_script(RunConfig& run) {
  if (run.provider.kind != ProviderKind::Mock) return;
  if (run.script_path.empty()) throw PreconditionError("the mock provider needs --script");
  run.provider.mock = mock_script(load_script_file(run.script_path)).mock;
}

BatchRow summarize(const SweepPoint& point, const std::vector<RunOutcome>& outcomes, int coherence_threshold) {
  BatchRow row;
  row.point = point;
  row.runs = static_cast<int>(outcomes.size());
  std::vector<double> coherence, rewards;
  for (const auto& o : outcomes) {
    row.run_dirs.push_back(o.run_dir);
    if (o.completed) ++row.completion;
    if (!o.final_evaluation) continue;
    const auto& e = *o.final_evaluation;
    if (e.is_novel) ++row.novelty;
    if (e.playable) ++row.playability;
    if (e.novel_and_playable) ++row.novel_and_playable;
    if (e.coherence) {
      coherence.push_back(*e.coherence);
      if (*e.coherence >= coherence_threshold) ++row.coherence_at_threshold;
    }
    if (e.agent_reward) rewards.push_back(*e.agent_reward);
  }
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  if (!coherence.empty()) row.coherence_mean = mean(coherence);
  if (!rewards.empty()) {
    const double m = mean(rewards);
    double ss = 0.0;
    for (double r : rewards) ss += (r - m) * (r - m);
    row.reward_mean = m;
    row.reward_std = std::sqrt(ss / rewards.size());
  }
  return row;
}

std::string format_mean_std(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f ± %.2f", mean, std);
  return buf;
}

Json report_to_json(const BatchReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json j{{"point",
            {{"story_paragraphs", {row.point.paragraphs_min, row.point.paragraphs_max}},
             {"objective_count", row.point.objectives},
             {"important_tile_cap", row.point.important_cap}}},
           {"runs", row.runs},
           {"counts",
            {{"novelty", row.novelty},
             {"playability", row.playability},
             {"novel_and_playable", row.novel_and_playable},
             {"completion", row.completion}}},
           {"coherence_count", row.coherence_at_threshold},
           {"run_dirs", row.run_dirs}};
    j["coherence_mean"] = row.coherence_mean ? Json(*row.coherence_mean) : Json(nullptr);
    if (row.reward_mean) {
      j["agent_reward"] = {{"mean", *row.reward_mean},
                           {"std", *row.reward_std},
                           {"formatted", format_mean_std(*row.reward_mean, *row.reward_std)}};
    } else {
      j["agent_reward"] = nullptr;
    }
    rows.push_back(j);
  }
  return Json{{"mode", r.mode},
              {"runs_per_point", r.runs_per_point},
              {"coherence_threshold", r.coherence_threshold},
              {"rows", rows}};
}

std::string report_table(const BatchReport& r) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %5s %8s %12s %17s %10s %10s %9s  %s\n", "point", "runs", "novelty",
                "playability", "novel&playable", "completion", "coh.mean", "coh>=" , "agent reward");
  os << "mode " << r.mode << ", coherence threshold " << r.coherence_threshold << "\n" << line;
  for (const auto& row : r.rows) {
    char coh[32] = "n/a";
    if (row.coherence_mean) std::snprintf(coh, sizeof coh, "%.1f", *row.coherence_mean);
    const auto reward = row.reward_mean ? format_mean_std(*row.reward_mean, *row.reward_std) : std::string("n/a");
    std::snprintf(line, sizeof line, "%-16s %5d %8d %12d %17d %10d %10s %9d  %s\n", sweep_label(row.point).c_str(),
                  row.runs, row.novelty, row.playability, row.novel_and_playable, row.completion, coh,
                  row.coherence_at_threshold, reward.c_str());
    os << line;
  }
  return os.str();
}

BatchReport run_batch(const CliConfig& config) {
  if (config.batch_runs < 1) throw PreconditionError("batch runs must be >= 1");
  std::vector<SweepPoint> points = config.sweep;
  if (points.empty()) {
    points.push_back({config.run.story_paragraphs_min, config.run.story_paragraphs_max, config.run.objective_count,
                      config.run.important_tile_cap});
  }
  std::vector<ScriptEntry> script;
  if (config.run.provider.kind == ProviderKind::Mock) {
    if (config.run.script_path.empty()) throw PreconditionError("the mock provider needs --script");
    script = load_script_file(config.run.script_path);
  }
  // Fail on unreadable tiles once, before spawning anything.
  load_dataset(config.run.env_tileset, TileCategory::Environment);
  load_dataset(config.run.char_tileset, TileCategory::Character);

  struct Job {
    std::size_t point;
    int index;
    RunConfig run;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (int k = 0; k < config.batch_runs; ++k) {
      RunConfig rc = config.run;
      rc.story_paragraphs_min = points[p].paragraphs_min;
      rc.story_paragraphs_max = points[p].paragraphs_max;
      rc.objective_count = points[p].objectives;
      rc.important_tile_cap = points[p].important_cap;
      rc.seed = config.run.seed + static_cast<std::uint64_t>(k);
      char id[32];
      std::snprintf(id, sizeof id, "run_%02d", k);
      rc.run_id = config.sweep.empty() ? std::string(id) : sweep_label(points[p]) + "/" + id;
      if (rc.provider.kind == ProviderKind::Mock) rc.provider.mock = mock_script(script).mock;
      jobs.push_back({p, k, std::move(rc)});
    }
  }

  std::vector<RunOutcome> outcomes(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      auto& o = outcomes[i];
      const auto& rc = jobs[i].run;
      o.run_dir = (fs::path(rc.output_root) / rc.effective_run_id()).string();
      try {
        const auto a = run(rc);
        o.completed = a.completed;
        if (a.final_round) o.final_evaluation = a.round_records[static_cast<std::size_t>(*a.final_round)].evaluation;
      } catch (const std::exception& e) {
        o.error = e.what();
      }
    }
  };
  const int workers = std::max(1, config.workers > 0 ? config.workers : static_cast<int>(points.size()));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  BatchReport report;
  report.mode = mode_name(config.run.mode);
  report.runs_per_point = config.batch_runs;
  report.coherence_threshold = config.coherence_threshold;
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::vector<RunOutcome> mine;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].point == p) mine.push_back(outcomes[i]);
    }
    report.rows.push_back(summarize(points[p], mine, config.coherence_threshold));
  }
  fs::create_directories(config.run.output_root);
  write_file((fs::path(config.run.output_root) / "batch_report.json").string(),
             dump_json(report_to_json(report)) + "\n");
  write_file((fs::path(config.run.output_root) / "batch_report.txt").string(), report_table(report));
  return report;
}

StoryPackage load_package_file(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ParseFailure(path + ": " + e.what());
  }
  try {
    if (j.is_object() && j.contains("legend")) return j.get<StoryPackage>();
    StoryPackage p;
    p.legend = j.get<TileLegend>();
    return p;
  } catch (const Json::exception& e) {
    throw ParseFailure(path + ": " + e.what());
  }
}

namespace {

WorldGrid load_world(const std::string& path) {
  const auto w = WorldGrid::from_text(read_file(path));
  if (w.height() == 0) throw ParseFailure(path + ": empty world");
  return w;
}

// Positions already in the file win when they hold the target; the rest are
// located in the world.
std::map<int, Cell> given_positions(const std::vector<Goal>& goals) {
  std::map<int, Cell> out;
  for (const auto& g : goals) {
    if (g.position) out[g.index] = *g.position;
  }
  return out;
}

// Fields the generate, batch and agent-run commands share.
struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::optional<int> rounds, objectives, important_cap, astar_budget, episodes, try_budget;
  std::string paragraphs;
  std::optional<double> novelty_threshold;
  std::string provider, model, endpoint, script, env_tileset, char_tileset, output_root, run_id, templates;
  bool any_order = false, best_of = false, no_judge = false;

  void add_to(CLI::App* app, bool with_plan) {
    app->add_option("--config", config, "TOML config file");
    app->add_option("--provider", provider, "openai, anthropic or mock");
    app->add_option("--model", model, "model name");
    app->add_option("--endpoint", endpoint, "provider endpoint URL");
    app->add_option("--script", script, "mock reply script (JSON)");
    app->add_option("--env-tileset", env_tileset, "environment tile manifest (CSV)");
    app->add_option("--char-tileset", char_tileset, "character tile manifest (CSV)");
    app->add_option("--templates", templates, "prompt template directory");
    app->add_option("--episodes", episodes, "agent episodes");
    app->add_option("--seed", seed, "run seed");
    if (!with_plan) return;
    app->add_option("--mode", mode, "full, direct, no-goals, no-important, one-step, one-round");
    app->add_option("--rounds", rounds, "generation rounds");
    app->add_option("--objectives", objectives, "objectives to extract");
    app->add_option("--paragraphs", paragraphs, "story paragraphs, N or MIN-MAX");
    app->add_option("--important-cap", important_cap, "important tile cap");
    app->add_option("--novelty-threshold", novelty_threshold, "novelty distance threshold");
    app->add_option("--astar-budget", astar_budget, "A* expansion budget");
    app->add_option("--try-budget", try_budget, "completion try budget");
    app->add_option("--out", output_root, "output root directory");
    app->add_option("--run-id", run_id, "run directory name");
    app->add_flag("--any-order", any_order, "playability visits the nearest objective first");
    app->add_flag("--best-of", best_of, "final world is the last playable round");
    app->add_flag("--no-judge", no_judge, "skip the coherence judge");
  }

  CliConfig resolve() const {
    CliConfig c = default_config();
    if (!config.empty()) c = load_config_file(config, c);
    auto& r = c.run;
    if (!provider.empty()) {
      const auto keep = r.script_path;
      r.provider = default_provider(parse_provider_kind(provider));
      r.script_path = keep;
    }
    if (!model.empty()) r.provider.model_name = model;
    if (!endpoint.empty()) r.provider.endpoint_url = endpoint;
    if (!script.empty()) r.script_path = script;
    if (!env_tileset.empty()) r.env_tileset = env_tileset;
    if (!char_tileset.empty()) r.char_tileset = char_tileset;
    if (!templates.empty()) r.template_dir = templates;
    if (episodes) r.agent_episodes = *episodes;
    if (seed) r.seed = *seed;
    if (!mode.empty()) r.mode = parse_mode(mode);
    if (rounds) r.rounds = *rounds;
    if (objectives) r.objective_count = *objectives;
    if (!paragraphs.empty()) std::tie(r.story_paragraphs_min, r.story_paragraphs_max) = parse_range(paragraphs);
    if (important_cap) r.important_tile_cap = *important_cap;
    if (novelty_threshold) r.novelty_threshold = *novelty_threshold;
    if (astar_budget) r.astar_iteration_budget = *astar_budget;
    if (try_budget) r.completion_try_budget = *try_budget;
    if (!output_root.empty()) r.output_root = output_root;
    if (!run_id.empty()) r.run_id = run_id;
    if (any_order) r.any_order = true;
    if (best_of) r.best_of = true;
    if (no_judge) r.coherence_judge = false;
    return c;
  }
};

std::string opt_text(const std::optional<int>& v) { return v ? std::to_string(*v) : "n/a"; }

int cmd_generate(const RunFlags& flags, std::ostream& out) {
  auto c = flags.resolve();
  c.run.validate();
  attach_script(c.run);
  const auto a = run(c.run);
  out << a.run_dir << "\n";
  std::string line = "run " + c.run.effective_run_id() + ": " + (a.completed ? "completed" : "budget exhausted") +
                     ", tries " + std::to_string(a.tries_used) + "/" + std::to_string(c.run.completion_try_budget) +
                     ", rounds " + std::to_string(a.round_records.size());
  if (a.final_round) {
    const auto& e = a.round_records[static_cast<std::size_t>(*a.final_round)].evaluation;
    char reward[32] = "n/a";
    if (e.agent_reward) std::snprintf(reward, sizeof reward, "%.4f", *e.agent_reward);
    line += std::string(", playable ") + (e.playable ? "yes" : "no") + ", novel " + (e.is_novel ? "yes" : "no") +
            ", coherence " + opt_text(e.coherence) + ", agent reward " + reward;
  }
  out << line << "\n";
  return a.completed ? 0 : 2;
}

int cmd_batch(const RunFlags& flags, std::optional<int> runs, std::optional<int> workers,
              const std::vector<std::string>& sweep, std::optional<int> threshold, std::ostream& out) {
  auto c = flags.resolve();
  if (runs) c.batch_runs = *runs;
  if (workers) c.workers = *workers;
  if (threshold) c.coherence_threshold = *threshold;
  if (!sweep.empty()) {
    c.sweep.clear();
    for (const auto& s : sweep) {
      std::stringstream ss(s);
      for (std::string p; std::getline(ss, p, ';');) {
        if (!trim(p).empty()) c.sweep.push_back(parse_sweep_point(p));
      }
    }
  }
  c.run.validate();
  const auto report = run_batch(c);
  out << report_table(report);
  out << (fs::path(c.run.output_root) / "batch_report.json").string() << "\n";
  return 0;
}

int cmd_evaluate(const std::string& world_file, const std::string& legend_file, const RunFlags& flags,
                 const std::vector<std::string>& priors, bool no_llm, const std::string& story_file,
                 std::ostream& out, std::ostream& err) {
  auto c = flags.resolve();
  const auto world = load_world(world_file);
  auto pkg = load_package_file(legend_file);
  if (!story_file.empty()) pkg.story_text = read_file(story_file);
  Warnings notes;
  if (!pkg.goals.empty()) {
    try {
      Warnings located;
      pkg.goals = resolve_goal_positions(world, pkg.goals, given_positions(pkg.goals), located);
    } catch (const GoalUnplaceable& e) {
      notes.push_back(e.what());
    }
  }
  std::vector<WorldGrid> prior;
  for (const auto& p : priors) prior.push_back(load_world(p));
  EvalSettings s;
  s.astar_budget = c.run.astar_iteration_budget;
  s.novelty_threshold = c.run.novelty_threshold;
  s.order = c.run.any_order ? ObjectiveOrder::NearestFirst : ObjectiveOrder::Story;
  const bool judge = !no_llm && c.run.provider.kind != ProviderKind::Mock;
  std::optional<LlmSession> session;
  if (judge) {
    session.emplace(c.run.provider, TemplateStore(c.run.template_dir.empty() ? default_template_dir()
                                                                                : c.run.template_dir));
  }
  const auto report = evaluate_world(world, pkg, prior, s, session ? &*session : nullptr, notes);
  for (const auto& n : notes) err << "note: " << n << "\n";
  out << dump_json(Json(report)) << "\n";
  return 0;
}

int cmd_render(const std::string& world_file, const std::string& legend_file, const std::string& out_png,
               const RunFlags& flags, std::ostream& out) {
  const auto c = flags.resolve();
  const auto world = load_world(world_file);
  if (!world.is_rectangular()) throw ParseFailure(world_file + ": world rows differ in length");
  const auto pkg = load_package_file(legend_file);
  const auto env = load_dataset(c.run.env_tileset, TileCategory::Environment);
  const auto chars = load_dataset(c.run.char_tileset, TileCategory::Character);
  BagOfWordsEmbedder embedder;
  Warnings w;
  const auto assignment = assign_tiles(pkg.legend, pkg.characters, env, chars, embedder, w);
  const auto image = render_world(world, assignment, pkg.legend.interactive);
  write_png(image, out_png);
  out << out_png << " " << image.width() << "x" << image.height() << "\n";
  return 0;
}

int cmd_make_tileset(const std::string& spec, const std::string& out_dir, std::ostream& out) {
  const auto [env, chars] = write_placeholder_assets(load_placeholder_spec(spec), out_dir);
  out << out_dir << ": " << env.assets.size() << " environment tiles, " << chars.assets.size()
      << " character tiles\n";
  return 0;
}

int cmd_agent_run(const std::string& world_file, const std::string& legend_file, const RunFlags& flags,
                  const std::string& out_file, std::ostream& out) {
  auto c = flags.resolve();
  attach_script(c.run);
  const auto world = load_world(world_file);
  auto pkg = load_package_file(legend_file);
  const auto* hero = pkg.protagonist();
  if (!hero) throw MissingProtagonist(legend_file + ": no protagonist");
  Warnings located;
  pkg.goals = resolve_goal_positions(world, pkg.goals, given_positions(pkg.goals), located);
  LlmSession session(c.run.provider,
                     TemplateStore(c.run.template_dir.empty() ? default_template_dir() : c.run.template_dir),
                     c.run.provider.kind == ProviderKind::Mock ? logical_clock() : system_clock_iso(),
                     c.run.reprompt_budget);
  LlmPolicy policy(session);
  const auto traces = run_episodes(world, pkg.goals, pkg.legend, hero->symbol, policy, c.run.agent_episodes);
  Json rewards = Json::array();
  for (const auto& t : traces) rewards.push_back(t.episode_reward);
  const Json j{{"episodes", traces}, {"rewards", rewards}};
  if (!out_file.empty()) write_file(out_file, dump_json(j) + "\n");
  for (std::size_t i = 0; i < traces.size(); ++i) {
    char line[64];
    std::snprintf(line, sizeof line, "episode %zu: reward %.4f\n", i, traces[i].episode_reward);
    out << line;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"w2w: turn stories into playable 2D tile worlds"};
  app.require_subcommand(1);

  RunFlags gen_flags;
  auto* gen = app.add_subcommand("generate", "run the pipeline once");
  gen_flags.add_to(gen, true);

  RunFlags batch_flags;
  std::optional<int> runs, workers, threshold;
  std::vector<std::string> sweep;
  auto* batch = app.add_subcommand("batch", "repeat runs and report counts");
  batch_flags.add_to(batch, true);
  batch->add_option("--runs", runs, "runs per sweep point (default 10)");
  batch->add_option("--workers", workers, "parallel runs (default: one per sweep point)");
  batch->add_option("--sweep", sweep, "PARAGRAPHS,OBJECTIVES,IMPORTANT_CAP; repeat or separate with ';'");
  batch->add_option("--coherence-threshold", threshold, "coherence score counted as a pass (default 70)");

  RunFlags eval_flags;
  std::string eval_world, eval_legend, eval_story;
  std::vector<std::string> priors;
  bool no_llm = false;
  auto* eval = app.add_subcommand("evaluate", "score a world file");
  eval_flags.add_to(eval, true);
  eval->add_option("world", eval_world, "world text file")->required();
  eval->add_option("legend", eval_legend, "legend or extractions JSON")->required();
  eval->add_option("--prior", priors, "earlier worlds for novelty");
  eval->add_option("--story", eval_story, "story text for the coherence judge");
  eval->add_flag("--no-llm", no_llm, "never call the coherence judge");

  RunFlags render_flags;
  std::string render_world_file, render_legend, render_out;
  auto* render = app.add_subcommand("render", "paste tiles for a world file");
  render_flags.add_to(render, false);
  render->add_option("world", render_world_file, "world text file")->required();
  render->add_option("legend", render_legend, "legend or extractions JSON")->required();
  render->add_option("out", render_out, "PNG to write")->required();

  std::string tileset_spec, tileset_out;
  auto* make = app.add_subcommand("make-tileset", "write the placeholder tile set");
  make->add_option("--spec", tileset_spec, "placeholder spec JSON")
      ->default_val((fs::path(W2W_ASSET_DIR) / "placeholder" / "spec.json").string());
  make->add_option("--out", tileset_out, "output directory")->required();

  RunFlags agent_flags;
  std::string agent_world, agent_legend, agent_out;
  auto* agent = app.add_subcommand("agent-run", "play a world with the LLM agent");
  agent_flags.add_to(agent, false);
  agent->add_option("world", agent_world, "world text file")->required();
  agent->add_option("legend", agent_legend, "extractions JSON with goals")->required();
  agent->add_option("--traces", agent_out, "write traces JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*gen) return cmd_generate(gen_flags, out);
    if (*batch) return cmd_batch(batch_flags, runs, workers, sweep, threshold, out);
    if (*eval) return cmd_evaluate(eval_world, eval_legend, eval_flags, priors, no_llm, eval_story, out, err);
    if (*render) return cmd_render(render_world_file, render_legend, render_out, render_flags, out);
    if (*make) return cmd_make_tileset(tileset_spec, tileset_out, out);
    if (*agent) return cmd_agent_run(agent_world, agent_legend, agent_flags, agent_out, out);
  } catch (const DatasetError& e) {
    err << "DatasetError: " << e.what() << "\n";
    return 1;
  } catch (const MissingAssignment& e) {
    err << "MissingAssignment: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace w2w::cli
