#include "w2w/extraction.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <memory>

#include "w2w/errors.hpp"
#include "w2w/text.hpp"

namespace w2w {

namespace {

std::string format_iso_ms(std::int64_t ms_since_epoch) {
  const std::time_t secs = static_cast<std::time_t>(ms_since_epoch / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms_since_epoch % 1000));
  return buf;
}

}  // namespace

Clock system_clock_iso() {
  return [] {
    const auto now = std::chrono::system_clock::now();
    return format_iso_ms(std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count());
  };
}

Clock logical_clock() {
  auto tick = std::make_shared<std::int64_t>(0);
  return [tick] { return format_iso_ms((*tick)++); };
}

LlmSession::LlmSession(ProviderConfig provider, TemplateStore templates, Clock clock, int reprompt_budget)
    : provider_(std::move(provider)),
      templates_(std::move(templates)),
      clock_(clock ? std::move(clock) : system_clock_iso()),
      reprompt_budget_(reprompt_budget) {
  if (reprompt_budget_ < 0) throw PreconditionError("re-prompt budget must be >= 0");
}

std::string LlmSession::call(const ChatRequest& req) {
  Exchange ex;
  ex.seq = transcript_.size();
  ex.timestamp = clock_();
  ex.step = req.step.value_or(ExtractionStep::Story);
  ex.label = label_;
  ex.request = req;
  try {
    ex.response = complete(provider_, req);
  } catch (const Error& e) {
    ex.error = e.what();
    transcript_.push_back(std::move(ex));
    throw;
  }
  transcript_.push_back(ex);
  return ex.response;
}

std::string LlmSession::transcript_jsonl() const {
  std::string out;
  for (const auto& ex : transcript_) {
    Json messages = Json::array();
    for (const auto& m : ex.request.messages) {
      messages.push_back({{"role", m.role == MessageRole::User ? "user" : "assistant"}, {"content", m.content}});
    }
    Json line{{"seq", ex.seq},
              {"timestamp", ex.timestamp},
              {"step", step_name(ex.step)},
              {"label", ex.label},
              {"system", ex.request.system_prompt},
              {"messages", messages},
              {"response", ex.response}};
    if (!ex.error.empty()) line["error"] = ex.error;
    out += line.dump();
    out += '\n';
  }
  return out;
}

const ExtractionSchema& schema_for(ExtractionStep step) {
  static const ExtractionSchema schemas[] = {
      {ExtractionStep::Story, "story", R"(fenced JSON {"story": "<paragraphs separated by blank lines>"})", 4096},
      {ExtractionStep::Characters, "characters",
       R"(fenced JSON {"characters": [{"name", "description", "role": protagonist|antagonist|npc}]})", 4096},
      {ExtractionStep::Tileset, "tileset",
       R"(fenced JSON {"tiles": {"<symbol>": "<description>"}, "characters": {"<name>": "<symbol>"}})", 4096},
      {ExtractionStep::Goals, "goals",
       R"(fenced JSON {"goals": [{"description", "target_symbol", "kind": reach_tile|pick_object|hit_enemy}]})", 4096},
      {ExtractionStep::ImportantTiles, "important_tiles", R"(fenced JSON {"important_tiles": ["<symbol>", ...]})", 4096},
      {ExtractionStep::WalkableTiles, "walkable_tiles", R"(fenced JSON {"walkable_tiles": ["<symbol>", ...]})", 4096},
      {ExtractionStep::ObjectTiles, "object_tiles", R"(fenced JSON {"object_tiles": ["<symbol>", ...]})", 4096},
      {ExtractionStep::WorldEnvironment, "world_environment", "fenced character grid, one row per line", 8192},
      {ExtractionStep::WorldFull, "world_full", "fenced character grid, one row per line", 8192},
      {ExtractionStep::CoherenceJudge, "coherence_judge", "fenced block holding one integer 0-100", 4096},
      {ExtractionStep::AgentActions, "agent_actions",
       "fenced block of action names separated by newlines or commas", 4096},
      {ExtractionStep::GoalPositions, "goal_positions",
       R"(fenced JSON {"positions": [{"index", "row", "col"}]})", 4096},
  };
  for (const auto& s : schemas) {
    if (s.step == step) return s;
  }
  throw PreconditionError("no schema for step");
}

namespace detail {

int run_step_loop(LlmSession& session, ExtractionStep step, const std::string& prompt,
                  const std::function<void(std::string_view)>& attempt) {
  ChatRequest req;
  req.system_prompt = session.templates().get("system");
  req.messages.push_back({MessageRole::User, prompt});
  req.max_output_tokens = schema_for(step).max_output_tokens;
  req.step = step;
  for (int n = 0;; ++n) {
    const auto response = session.call(req);
    std::string error;
    try {
      attempt(response);
      return n;
    } catch (const ParseFailure& e) {
      error = e.what();
    } catch (const Json::exception& e) {
      error = e.what();
    }
    if (n >= session.reprompt_budget()) {
      throw ParseFailure("step '" + std::string(step_name(step)) + "' still unparseable after " + std::to_string(n) +
                         " re-prompts: " + error);
    }
    req.messages.push_back({MessageRole::Assistant, response});
    req.messages.push_back({MessageRole::User, session.templates().render("reprompt", {{"error", error}})});
  }
}

}  // namespace detail

Json extract_json_object(std::string_view text) {
  const auto blocks = fenced_blocks(text);
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
    auto j = Json::parse(it->body, nullptr, false);
    if (!j.is_discarded() && j.is_object()) return j;
  }
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
    auto j = Json::parse(text.substr(open, close - open + 1), nullptr, false);
    if (!j.is_discarded() && j.is_object()) return j;
  }
  throw ParseFailure("no JSON object found in response");
}

namespace {

const Json& require(const Json& j, const char* key) {
  if (!j.contains(key)) throw ParseFailure(std::string("JSON object lacks key '") + key + "'");
  return j.at(key);
}

std::string require_string(const Json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) throw ParseFailure(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

std::string parse_story(std::string_view text, Warnings&) {
  std::string story;
  try {
    story = require_string(extract_json_object(text), "story");
  } catch (const ParseFailure&) {
    // Plain prose is accepted too, fenced or not.
    const auto blocks = fenced_blocks(text);
    story = blocks.empty() ? std::string(text) : blocks.back().body;
  }
  story = trim(story);
  if (story.empty()) throw ParseFailure("story is empty");
  return story;
}

std::vector<CharacterInfo> parse_characters(std::string_view text, Warnings&) {
  const auto j = extract_json_object(text);
  const auto& arr = require(j, "characters");
  if (!arr.is_array() || arr.empty()) throw ParseFailure("'characters' must be a non-empty array");
  std::vector<CharacterInfo> out;
  int protagonists = 0;
  for (const auto& e : arr) {
    CharacterInfo c;
    c.name = trim(require_string(e, "name"));
    c.description = trim(require_string(e, "description"));
    c.role = parse_role(require_string(e, "role"));
    if (c.name.empty()) throw ParseFailure("character with empty name");
    if (c.description.empty()) throw ParseFailure("character '" + c.name + "' has an empty description");
    if (c.role == CharacterRole::Protagonist) ++protagonists;
    out.push_back(std::move(c));
  }
  if (protagonists != 1) {
    throw ParseFailure("exactly one protagonist required, got " + std::to_string(protagonists));
  }
  return out;
}

TilesetExtraction parse_tileset(std::string_view text, const std::vector<CharacterInfo>& characters,
                                Warnings& warnings) {
  const auto j = extract_json_object(text);
  const auto& tiles = require(j, "tiles");
  if (!tiles.is_object() || tiles.empty()) throw ParseFailure("'tiles' must be a non-empty object");
  TilesetExtraction out;
  for (const auto& [key, value] : tiles.items()) {
    const Symbol s = symbol_from_json(Json(key));
    if (!value.is_string() || trim(value.get<std::string>()).empty()) {
      throw ParseFailure("tile '" + key + "' needs a non-empty description");
    }
    out.legend.entries[s] = trim(value.get<std::string>());
  }

  const Json char_map = j.contains("characters") ? j.at("characters") : Json::object();
  if (!char_map.is_object()) throw ParseFailure("'characters' must map character names to symbols");
  out.characters = characters;
  for (auto& c : out.characters) {
    if (!char_map.contains(c.name)) throw ParseFailure("no symbol assigned to character '" + c.name + "'");
    c.symbol = symbol_from_json(char_map.at(c.name));
    if (out.legend.character_symbols.contains(c.symbol)) {
      throw ParseFailure(std::string("symbol '") + c.symbol + "' assigned to two characters");
    }
    out.legend.character_symbols.insert(c.symbol);
    if (auto it = out.legend.entries.find(c.symbol); it != out.legend.entries.end() && it->second != c.description) {
      warnings.push_back(std::string("tile '") + c.symbol + "' (" + it->second + ") now denotes character " + c.name);
    }
    out.legend.entries[c.symbol] = c.description;
  }
  return out;
}

std::vector<Goal> parse_goals(std::string_view text, const TileLegend& legend, int objective_count,
                              Warnings& warnings) {
  const auto j = extract_json_object(text);
  const auto& arr = require(j, "goals");
  if (!arr.is_array() || arr.empty()) throw ParseFailure("'goals' must be a non-empty array");
  std::vector<Goal> out;
  for (const auto& e : arr) {
    Goal g;
    g.index = static_cast<int>(out.size());
    g.description = trim(require_string(e, "description"));
    g.target_symbol = symbol_from_json(require(e, "target_symbol"));
    g.target_kind = parse_goal_kind(e.contains("kind") ? require_string(e, "kind") : require_string(e, "target_kind"));
    if (!legend.contains(g.target_symbol)) {
      throw ParseFailure(std::string("goal target symbol '") + g.target_symbol + "' is not in the tile mapping");
    }
    out.push_back(std::move(g));
  }
  if (objective_count > 0 && static_cast<int>(out.size()) != objective_count) {
    warnings.push_back("asked for " + std::to_string(objective_count) + " objectives, got " +
                       std::to_string(out.size()));
    if (static_cast<int>(out.size()) > objective_count) out.resize(static_cast<std::size_t>(objective_count));
  }
  return out;
}

std::vector<Symbol> parse_symbol_list(std::string_view text, std::string_view key, const TileLegend& legend,
                                      std::optional<std::size_t> cap, Warnings& warnings) {
  const auto j = extract_json_object(text);
  const auto& arr = require(j, std::string(key).c_str());
  if (!arr.is_array()) throw ParseFailure("'" + std::string(key) + "' must be an array");
  std::vector<Symbol> out;
  for (const auto& e : arr) {
    Symbol s;
    try {
      s = symbol_from_json(e);
    } catch (const ParseFailure& err) {
      warnings.push_back(std::string(key) + ": dropped " + err.what());
      continue;
    }
    if (!legend.contains(s)) {
      warnings.push_back(std::string(key) + ": dropped symbol '" + s + "' absent from the tile mapping");
      continue;
    }
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  if (cap && out.size() > *cap) {
    warnings.push_back(std::string(key) + ": " + std::to_string(out.size()) + " symbols truncated to cap " +
                       std::to_string(*cap));
    out.resize(*cap);
  }
  return out;
}

std::map<int, Cell> parse_goal_positions(std::string_view text) {
  const auto j = extract_json_object(text);
  const auto& arr = require(j, "positions");
  if (!arr.is_array()) throw ParseFailure("'positions' must be an array");
  std::map<int, Cell> out;
  for (const auto& e : arr) {
    const auto& idx = require(e, "index");
    const auto& row = require(e, "row");
    const auto& col = require(e, "col");
    if (!idx.is_number_integer() || !row.is_number_integer() || !col.is_number_integer()) {
      throw ParseFailure("position entries need integer index/row/col");
    }
    out[idx.get<int>()] = Cell{row.get<int>(), col.get<int>()};
  }
  return out;
}

DirectWorld parse_direct_world(std::string_view text, Warnings& warnings) {
  const auto j = extract_json_object(text);
  DirectWorld out;
  const auto& tiles = require(j, "tiles");
  if (!tiles.is_object() || tiles.empty()) throw ParseFailure("'tiles' must be a non-empty object");
  for (const auto& [key, value] : tiles.items()) {
    if (!value.is_string()) throw ParseFailure("tile '" + key + "' needs a string description");
    out.legend.entries[symbol_from_json(Json(key))] = value.get<std::string>();
  }
  if (j.contains("characters")) {
    for (const auto& e : j.at("characters")) {
      CharacterInfo c;
      c.name = require_string(e, "name");
      c.description = require_string(e, "description");
      c.role = parse_role(require_string(e, "role"));
      c.symbol = symbol_from_json(require(e, "symbol"));
      out.legend.entries.try_emplace(c.symbol, c.description);
      out.legend.character_symbols.insert(c.symbol);
      out.characters.push_back(std::move(c));
    }
  }
  if (j.contains("walkable")) {
    for (const auto& e : j.at("walkable")) {
      const Symbol s = symbol_from_json(e);
      if (out.legend.contains(s) && !out.legend.is_character(s)) out.legend.walkable.insert(s);
    }
  }
  try {
    out.grid = parse_grid(text, out.legend);
  } catch (const NoGridFound& e) {
    throw ParseFailure(e.what());
  }
  warnings.insert(warnings.end(), out.grid.warnings.begin(), out.grid.warnings.end());
  return out;
}

std::string serialize_characters(const std::vector<CharacterInfo>& characters) {
  return dump_json(Json(characters));
}

std::string serialize_tile_mapping(const TileLegend& legend) {
  Json j = Json::object();
  for (const auto& [s, d] : legend.entries) j[std::string(1, s)] = d;
  return dump_json(j);
}

std::string serialize_goals(const std::vector<Goal>& goals) { return dump_json(Json(goals)); }

std::string serialize_symbols(const std::set<Symbol>& symbols, const TileLegend& legend) {
  Json j = Json::object();
  for (Symbol s : symbols) {
    auto it = legend.entries.find(s);
    j[std::string(1, s)] = it == legend.entries.end() ? "" : it->second;
  }
  return dump_json(j);
}

}  // namespace w2w
