#include "w2w/json_io.hpp"

#include "w2w/errors.hpp"
#include "w2w/text.hpp"

namespace w2w {

std::string_view to_string(CharacterRole role) {
  switch (role) {
    case CharacterRole::Protagonist: return "protagonist";
    case CharacterRole::Antagonist: return "antagonist";
    case CharacterRole::NonPlayer: return "npc";
  }
  return "npc";
}

CharacterRole parse_role(std::string_view text) {
  const auto t = to_lower(trim(text));
  if (t == "protagonist" || t == "hero" || t == "player") return CharacterRole::Protagonist;
  if (t == "antagonist" || t == "villain" || t == "enemy") return CharacterRole::Antagonist;
  if (t == "npc" || t == "nonplayer" || t == "non_player" || t == "non-player" || t == "other") {
    return CharacterRole::NonPlayer;
  }
  throw ParseFailure("unknown character role '" + std::string(text) + "'");
}

std::string_view to_string(GoalKind kind) {
  switch (kind) {
    case GoalKind::ReachTile: return "reach_tile";
    case GoalKind::PickObject: return "pick_object";
    case GoalKind::HitEnemy: return "hit_enemy";
  }
  return "reach_tile";
}

GoalKind parse_goal_kind(std::string_view text) {
  const auto t = to_lower(trim(text));
  if (t == "reach_tile" || t == "reach" || t == "reachtile" || t == "go_to") return GoalKind::ReachTile;
  if (t == "pick_object" || t == "pick" || t == "pickobject" || t == "collect") return GoalKind::PickObject;
  if (t == "hit_enemy" || t == "hit" || t == "hitenemy" || t == "attack") return GoalKind::HitEnemy;
  throw ParseFailure("unknown goal kind '" + std::string(text) + "'");
}

Symbol symbol_from_json(const Json& j) {
  if (!j.is_string()) throw ParseFailure("tile symbol must be a string, got " + j.dump());
  const auto s = j.get<std::string>();
  if (s.size() != 1 || !is_valid_symbol(s[0])) {
    throw ParseFailure("tile symbol must be one visible ASCII character, got \"" + s + "\"");
  }
  return s[0];
}

Json symbols_to_json(const std::set<Symbol>& symbols) {
  Json arr = Json::array();
  for (Symbol s : symbols) arr.push_back(std::string(1, s));
  return arr;
}

namespace {

std::set<Symbol> symbol_set(const Json& j, const char* key) {
  std::set<Symbol> out;
  if (!j.contains(key)) return out;
  for (const auto& e : j.at(key)) out.insert(symbol_from_json(e));
  return out;
}

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseFailure(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseFailure(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

void to_json(Json& j, const Cell& c) { j = Json{{"row", c.row}, {"col", c.col}}; }

void from_json(const Json& j, Cell& c) {
  c.row = field<int>(j, "row");
  c.col = field<int>(j, "col");
}

void to_json(Json& j, const CharacterInfo& c) {
  j = Json{{"name", c.name}, {"description", c.description}, {"role", to_string(c.role)}};
  if (c.symbol != '\0') j["symbol"] = std::string(1, c.symbol);
}

void from_json(const Json& j, CharacterInfo& c) {
  c.name = field<std::string>(j, "name");
  c.description = field<std::string>(j, "description");
  c.role = parse_role(field<std::string>(j, "role"));
  c.symbol = j.contains("symbol") ? symbol_from_json(j.at("symbol")) : '\0';
}

void to_json(Json& j, const TileLegend& l) {
  Json entries = Json::object();
  for (const auto& [s, d] : l.entries) entries[std::string(1, s)] = d;
  j = Json{{"entries", entries},
           {"walkable", symbols_to_json(l.walkable)},
           {"interactive", symbols_to_json(l.interactive)},
           {"important", symbols_to_json(l.important)},
           {"character_symbols", symbols_to_json(l.character_symbols)}};
}

void from_json(const Json& j, TileLegend& l) {
  if (!j.is_object() || !j.contains("entries") || !j.at("entries").is_object()) {
    throw ParseFailure("legend must be an object with an 'entries' object");
  }
  l = TileLegend{};
  for (const auto& [key, value] : j.at("entries").items()) {
    const Symbol s = symbol_from_json(Json(key));
    if (!value.is_string()) throw ParseFailure("legend description for '" + key + "' must be a string");
    l.entries[s] = value.get<std::string>();
  }
  l.walkable = symbol_set(j, "walkable");
  l.interactive = symbol_set(j, "interactive");
  l.important = symbol_set(j, "important");
  l.character_symbols = symbol_set(j, "character_symbols");
}

void to_json(Json& j, const Goal& g) {
  j = Json{{"index", g.index},
           {"description", g.description},
           {"target_symbol", std::string(1, g.target_symbol)},
           {"target_kind", to_string(g.target_kind)}};
  if (g.position) j["position"] = *g.position;
}

void from_json(const Json& j, Goal& g) {
  g.index = field<int>(j, "index");
  g.description = field<std::string>(j, "description");
  g.target_symbol = symbol_from_json(j.at("target_symbol"));
  g.target_kind = parse_goal_kind(field<std::string>(j, "target_kind"));
  g.position.reset();
  if (j.contains("position") && !j.at("position").is_null()) g.position = j.at("position").get<Cell>();
}

void to_json(Json& j, const StoryPackage& p) {
  j = Json{{"story_text", p.story_text},
           {"paragraph_count", p.paragraph_count},
           {"characters", p.characters},
           {"legend", p.legend},
           {"goals", p.goals}};
}

void from_json(const Json& j, StoryPackage& p) {
  p.story_text = j.value("story_text", std::string{});
  p.paragraph_count = j.value("paragraph_count", count_paragraphs(p.story_text));
  p.characters = j.contains("characters") ? j.at("characters").get<std::vector<CharacterInfo>>()
                                          : std::vector<CharacterInfo>{};
  p.legend = j.at("legend").get<TileLegend>();
  p.goals = j.contains("goals") ? j.at("goals").get<std::vector<Goal>>() : std::vector<Goal>{};
}

std::string dump_json(const Json& j) { return j.dump(2); }

}  // namespace w2w
