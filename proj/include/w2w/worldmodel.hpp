#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace w2w {

// A tile symbol: one visible ASCII character ('!'..'~').
using Symbol = char;

bool is_valid_symbol(char c);

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

enum class CharacterRole { Protagonist, Antagonist, NonPlayer };

struct CharacterInfo {
  std::string name;
  std::string description;
  CharacterRole role = CharacterRole::NonPlayer;
  Symbol symbol = '\0';
};

struct TileLegend {
  std::map<Symbol, std::string> entries;
  std::set<Symbol> walkable;
  std::set<Symbol> interactive;
  std::set<Symbol> important;
  std::set<Symbol> character_symbols;

  bool contains(Symbol s) const { return entries.contains(s); }
  bool is_walkable(Symbol s) const { return walkable.contains(s); }
  bool is_character(Symbol s) const { return character_symbols.contains(s); }

  // Throws PreconditionError when a category set references an unknown
  // symbol, a character is walkable, or |important| exceeds the cap.
  void validate(std::size_t important_cap) const;
};

enum class GoalKind { ReachTile, PickObject, HitEnemy };

struct Goal {
  int index = 0;
  std::string description;
  Symbol target_symbol = '\0';
  GoalKind target_kind = GoalKind::ReachTile;
  std::optional<Cell> position;
};

struct StoryPackage {
  std::string story_text;
  int paragraph_count = 0;
  std::vector<CharacterInfo> characters;
  TileLegend legend;
  std::vector<Goal> goals;

  // nullptr when no character has the Protagonist role.
  const CharacterInfo* protagonist() const;
};

// Blank-line separated paragraphs; a text without blank lines is one paragraph.
int count_paragraphs(std::string_view text);

// Row-major grid of symbols. Rows may be ragged until algorithmic_fixes runs.
class WorldGrid {
 public:
  WorldGrid() = default;
  explicit WorldGrid(std::vector<std::string> rows) : rows_(std::move(rows)) {}

  const std::vector<std::string>& rows() const { return rows_; }
  int height() const { return static_cast<int>(rows_.size()); }
  // Longest row length.
  int width() const;
  bool empty() const { return rows_.empty(); }
  bool is_rectangular() const;
  bool in_bounds(Cell c) const;
  Symbol at(Cell c) const { return rows_[c.row][c.col]; }
  void set(Cell c, Symbol s) { rows_[c.row][c.col] = s; }
  std::size_t count(Symbol s) const;
  bool contains(Symbol s) const { return count(s) > 0; }

  // Newline-joined rows, no trailing newline.
  std::string to_text() const;
  // Inverse of to_text; tolerates a trailing newline and CRLF line ends.
  static WorldGrid from_text(std::string_view text);

  bool operator==(const WorldGrid&) const = default;

 private:
  std::vector<std::string> rows_;
};

struct ParsedGrid {
  WorldGrid grid;
  std::vector<std::string> warnings;
};

inline constexpr double kDefaultGridLineFraction = 0.6;

// Pulls the character map out of free-form model output. The last fenced
// block wins; without fences, runs of whitespace-free lines whose symbols
// are mostly legend symbols are candidates. Unknown symbols are replaced by
// the block's most frequent walkable symbol, one warning per substitution.
ParsedGrid parse_grid(std::string_view raw_llm_text, const TileLegend& legend,
                      double legend_fraction = kDefaultGridLineFraction);

// Symbol used to fill holes: most frequent walkable symbol in the grid, else
// the smallest walkable legend symbol, else the most frequent non-character
// symbol in the grid, else the smallest non-character legend entry, else '.'.
Symbol fill_symbol(const WorldGrid& w, const TileLegend& legend);

// Duplicate characters keep their top-left occurrence, then ragged rows are
// padded to the widest row. Idempotent.
WorldGrid algorithmic_fixes(const WorldGrid& w, const TileLegend& legend);

std::optional<Cell> locate_symbol(const WorldGrid& w, Symbol s);

}  // namespace w2w
