#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <string_view>

#include "w2w/worldmodel.hpp"

// JSON mappings for the core domain types. Symbols are one-character strings,
// enums are lowercase snake_case names. Malformed input raises ParseFailure.
namespace w2w {

using Json = nlohmann::json;

std::string_view to_string(CharacterRole role);
CharacterRole parse_role(std::string_view text);
std::string_view to_string(GoalKind kind);
GoalKind parse_goal_kind(std::string_view text);

Symbol symbol_from_json(const Json& j);
Json symbols_to_json(const std::set<Symbol>& symbols);

void to_json(Json& j, const Cell& c);
void from_json(const Json& j, Cell& c);
void to_json(Json& j, const CharacterInfo& c);
void from_json(const Json& j, CharacterInfo& c);
void to_json(Json& j, const TileLegend& l);
void from_json(const Json& j, TileLegend& l);
void to_json(Json& j, const Goal& g);
void from_json(const Json& j, Goal& g);
void to_json(Json& j, const StoryPackage& p);
void from_json(const Json& j, StoryPackage& p);

// Stable pretty-printed form used for every artifact and prompt context.
std::string dump_json(const Json& j);

}  // namespace w2w
