#include "w2w/worldmodel.hpp"

#include <algorithm>
#include <array>

#include "w2w/errors.hpp"
#include "w2w/text.hpp"

namespace w2w {

bool is_valid_symbol(char c) { return c >= '!' && c <= '~'; }

void TileLegend::validate(std::size_t important_cap) const {
  for (const auto& [sym, desc] : entries) {
    if (!is_valid_symbol(sym)) {
      throw PreconditionError(std::string("legend symbol is not a visible ASCII character: code ") +
                              std::to_string(static_cast<int>(static_cast<unsigned char>(sym))));
    }
  }
  auto check_subset = [&](const std::set<Symbol>& set, const char* name) {
    for (Symbol s : set) {
      if (!contains(s)) {
        throw PreconditionError(std::string(name) + " symbol '" + s + "' missing from legend entries");
      }
    }
  };
  check_subset(walkable, "walkable");
  check_subset(interactive, "interactive");
  check_subset(important, "important");
  check_subset(character_symbols, "character");
  for (Symbol s : character_symbols) {
    if (walkable.contains(s)) {
      throw PreconditionError(std::string("character symbol '") + s + "' is marked walkable");
    }
  }
  if (important.size() > important_cap) {
    throw PreconditionError("important tile set has " + std::to_string(important.size()) +
                            " symbols, cap is " + std::to_string(important_cap));
  }
}

const CharacterInfo* StoryPackage::protagonist() const {
  for (const auto& c : characters) {
    if (c.role == CharacterRole::Protagonist) return &c;
  }
  return nullptr;
}

int count_paragraphs(std::string_view text) {
  int paragraphs = 0;
  bool in_paragraph = false;
  for (const auto& line : split_lines(text)) {
    if (trim(line).empty()) {
      in_paragraph = false;
    } else if (!in_paragraph) {
      in_paragraph = true;
      ++paragraphs;
    }
  }
  return paragraphs;
}

int WorldGrid::width() const {
  std::size_t w = 0;
  for (const auto& r : rows_) w = std::max(w, r.size());
  return static_cast<int>(w);
}

bool WorldGrid::is_rectangular() const {
  if (rows_.empty()) return true;
  return std::all_of(rows_.begin(), rows_.end(),
                     [&](const std::string& r) { return r.size() == rows_.front().size(); });
}

bool WorldGrid::in_bounds(Cell c) const {
  return c.row >= 0 && c.row < height() && c.col >= 0 &&
         c.col < static_cast<int>(rows_[c.row].size());
}

std::size_t WorldGrid::count(Symbol s) const {
  std::size_t n = 0;
  for (const auto& r : rows_) n += static_cast<std::size_t>(std::count(r.begin(), r.end(), s));
  return n;
}

std::string WorldGrid::to_text() const {
  std::string out;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (i) out += '\n';
    out += rows_[i];
  }
  return out;
}

WorldGrid WorldGrid::from_text(std::string_view text) {
  auto lines = split_lines(text);
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return WorldGrid(std::move(lines));
}

namespace {

using Counts = std::array<std::size_t, 128>;

Counts symbol_counts(const std::vector<std::string>& rows) {
  Counts counts{};
  for (const auto& r : rows) {
    for (char c : r) {
      if (is_valid_symbol(c)) ++counts[static_cast<unsigned char>(c)];
    }
  }
  return counts;
}

// Highest count wins, ties go to the smaller symbol.
std::optional<Symbol> most_frequent(const Counts& counts, auto&& accept) {
  std::optional<Symbol> best;
  std::size_t best_count = 0;
  for (int c = '!'; c <= '~'; ++c) {
    const auto n = counts[c];
    if (n > best_count && accept(static_cast<Symbol>(c))) {
      best = static_cast<Symbol>(c);
      best_count = n;
    }
  }
  return best;
}

Symbol fill_symbol_for(const std::vector<std::string>& rows, const TileLegend& legend) {
  const auto counts = symbol_counts(rows);
  auto non_character = [&](Symbol s) { return !legend.is_character(s); };
  if (auto s = most_frequent(counts, [&](Symbol s) { return legend.is_walkable(s) && non_character(s); })) {
    return *s;
  }
  for (Symbol s : legend.walkable) {
    if (non_character(s)) return s;
  }
  if (auto s = most_frequent(counts, [&](Symbol s) {
        return non_character(s) && (legend.entries.empty() || legend.contains(s));
      })) {
    return *s;
  }
  for (const auto& [s, desc] : legend.entries) {
    if (non_character(s)) return s;
  }
  for (char c = '.'; c <= '~'; ++c) {
    if (non_character(c)) return c;
  }
  return '.';
}

double legend_fraction(std::string_view line, const TileLegend& legend) {
  if (line.empty()) return 0.0;
  const auto hits = std::count_if(line.begin(), line.end(), [&](char c) { return legend.contains(c); });
  return static_cast<double>(hits) / static_cast<double>(line.size());
}

double aggregate_fraction(const std::vector<std::string>& lines, const TileLegend& legend) {
  std::size_t hits = 0, total = 0;
  for (const auto& l : lines) {
    total += l.size();
    hits += static_cast<std::size_t>(std::count_if(l.begin(), l.end(), [&](char c) { return legend.contains(c); }));
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

bool grid_like_line(std::string_view line) {
  return !line.empty() && std::all_of(line.begin(), line.end(), [](char c) { return is_valid_symbol(c); });
}

std::vector<std::string> non_blank_trimmed(const std::vector<std::string>& lines) {
  std::vector<std::string> out;
  for (const auto& l : lines) {
    auto t = trim(l);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::size_t modal_length(const std::vector<std::string>& run) {
  std::map<std::size_t, int> freq;
  for (const auto& l : run) ++freq[l.size()];
  std::size_t best = 0;
  int best_n = -1;
  for (const auto& [len, n] : freq) {
    if (n > best_n) {
      best = len;
      best_n = n;
    }
  }
  return best;
}

// Drops header/footer words glued to a grid ("Map:"): edge lines with no
// legend symbol at all, or off-width and mostly non-legend.
void trim_run_edges(std::vector<std::string>& run, const TileLegend& legend, double threshold) {
  auto stray = [&](const std::string& line, std::size_t width) {
    const double f = legend_fraction(line, legend);
    return f == 0.0 || (line.size() != width && f < threshold);
  };
  while (run.size() >= 2) {
    const auto width = modal_length(run);
    if (stray(run.front(), width)) {
      run.erase(run.begin());
    } else if (stray(run.back(), width)) {
      run.pop_back();
    } else {
      break;
    }
  }
}

}  // namespace

Symbol fill_symbol(const WorldGrid& w, const TileLegend& legend) { return fill_symbol_for(w.rows(), legend); }

ParsedGrid parse_grid(std::string_view raw_llm_text, const TileLegend& legend, double threshold) {
  if (trim(raw_llm_text).empty()) throw PreconditionError("parse_grid: empty model output");

  const auto blocks = fenced_blocks(raw_llm_text);
  std::vector<std::string> chosen;
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
    auto lines = non_blank_trimmed(split_lines(it->body));
    if (lines.size() >= 2 && aggregate_fraction(lines, legend) >= threshold) {
      chosen = std::move(lines);
      break;
    }
  }

  if (chosen.empty()) {
    // Unfenced fallback: runs of grid-like lines outside any fence.
    std::vector<std::vector<std::string>> runs;
    std::vector<std::string> current;
    auto close_run = [&] {
      if (!current.empty()) runs.push_back(std::move(current));
      current.clear();
    };
    for (const auto& line : strip_fenced_blocks(raw_llm_text)) {
      const auto t = trim(line);
      if (t.empty()) continue;
      if (grid_like_line(t)) {
        current.emplace_back(t);
      } else {
        close_run();
      }
    }
    close_run();
    for (auto& run : runs) {
      trim_run_edges(run, legend, threshold);
      if (run.size() < 2 || aggregate_fraction(run, legend) < threshold) continue;
      if (run.size() >= chosen.size()) chosen = run;  // tallest, later wins ties
    }
  }

  if (chosen.size() < 2) throw NoGridFound("no character grid of height >= 2 found in model output");

  ParsedGrid out;
  const Symbol fill = fill_symbol_for(chosen, legend);
  for (std::size_t r = 0; r < chosen.size(); ++r) {
    auto& row = chosen[r];
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!legend.contains(row[c])) {
        out.warnings.push_back("unknown symbol '" + std::string(1, row[c]) + "' at (" + std::to_string(r) + "," +
                               std::to_string(c) + ") replaced by '" + std::string(1, fill) + "'");
        row[c] = fill;
      }
    }
  }
  out.grid = WorldGrid(std::move(chosen));
  return out;
}

WorldGrid algorithmic_fixes(const WorldGrid& w, const TileLegend& legend) {
  if (w.empty()) throw PreconditionError("algorithmic_fixes: empty grid");
  auto rows = w.rows();
  const Symbol fill = fill_symbol_for(rows, legend);

  std::set<Symbol> seen;
  for (auto& row : rows) {
    for (char& s : row) {
      if (!legend.is_character(s)) continue;
      if (!seen.insert(s).second) s = fill;
    }
  }

  const auto max_width = w.width();
  for (auto& row : rows) {
    if (static_cast<int>(row.size()) >= max_width) continue;
    Symbol pad = fill;
    for (auto it = row.rbegin(); it != row.rend(); ++it) {
      if (!legend.is_character(*it)) {
        pad = *it;
        break;
      }
    }
    row.append(static_cast<std::size_t>(max_width) - row.size(), pad);
  }
  return WorldGrid(std::move(rows));
}

std::optional<Cell> locate_symbol(const WorldGrid& w, Symbol s) {
  for (int r = 0; r < w.height(); ++r) {
    const auto& row = w.rows()[r];
    if (auto c = row.find(s); c != std::string::npos) return Cell{r, static_cast<int>(c)};
  }
  return std::nullopt;
}

}  // namespace w2w
