#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "w2w/json_io.hpp"
#include "w2w/llm.hpp"
#include "w2w/prompts.hpp"
#include "w2w/worldmodel.hpp"

namespace w2w {

using Warnings = std::vector<std::string>;

// Timestamp source for transcripts.
using Clock = std::function<std::string()>;
// Wall-clock ISO-8601 UTC with milliseconds.
Clock system_clock_iso();
// Deterministic: 1970-01-01T00:00:00.000Z, then +1 ms per call.
Clock logical_clock();

struct Exchange {
  std::size_t seq = 0;
  std::string timestamp;
  ExtractionStep step = ExtractionStep::Story;
  std::string label;  // free-form stage tag, e.g. "round 1"
  ChatRequest request;
  std::string response;
  std::string error;  // set when the call itself failed
};

// A provider handle plus everything needed to turn context into prompts and
// remember what was said. One session per pipeline run.
class LlmSession {
 public:
  LlmSession(ProviderConfig provider, TemplateStore templates, Clock clock = system_clock_iso(),
             int reprompt_budget = 3);

  std::string call(const ChatRequest& req);

  const ProviderConfig& provider() const { return provider_; }
  const TemplateStore& templates() const { return templates_; }
  int reprompt_budget() const { return reprompt_budget_; }
  void set_label(std::string label) { label_ = std::move(label); }

  const std::vector<Exchange>& transcript() const { return transcript_; }
  // One JSON object per line.
  std::string transcript_jsonl() const;

 private:
  ProviderConfig provider_;
  TemplateStore templates_;
  Clock clock_;
  int reprompt_budget_;
  std::string label_;
  std::vector<Exchange> transcript_;
};

struct ExtractionSchema {
  ExtractionStep step;
  std::string_view template_name;
  std::string_view expected_shape;
  int max_output_tokens;
};

const ExtractionSchema& schema_for(ExtractionStep step);

template <typename T>
struct StepResult {
  T value;
  Warnings warnings;
  int reprompts = 0;
};

namespace detail {
// Prompting loop shared by every run_step instantiation. `attempt` parses a
// response and throws ParseFailure to request a re-prompt.
int run_step_loop(LlmSession& session, ExtractionStep step, const std::string& prompt,
                  const std::function<void(std::string_view)>& attempt);
}  // namespace detail

// Renders the step's template (or `template_name`) with the accumulated
// context, calls the provider and parses. Parse failures are fed back to the
// model up to the session's re-prompt budget, then raised as ParseFailure.
template <typename T>
StepResult<T> run_step(LlmSession& session, ExtractionStep step, const PromptContext& context,
                       const std::function<T(std::string_view, Warnings&)>& parse,
                       std::string_view template_name = {}) {
  const auto& schema = schema_for(step);
  const auto prompt =
      session.templates().render(template_name.empty() ? schema.template_name : template_name, context);
  std::optional<T> value;
  Warnings warnings;
  const int reprompts = detail::run_step_loop(session, step, prompt, [&](std::string_view response) {
    Warnings w;
    value.emplace(parse(response, w));
    warnings = std::move(w);
  });
  return StepResult<T>{std::move(*value), std::move(warnings), reprompts};
}

// --- structured output parsers -------------------------------------------

// Last fenced block that parses as a JSON object, else the outermost {...}.
Json extract_json_object(std::string_view text);

std::string parse_story(std::string_view text, Warnings& warnings);
std::vector<CharacterInfo> parse_characters(std::string_view text, Warnings& warnings);

struct TilesetExtraction {
  TileLegend legend;  // entries and character_symbols filled
  std::vector<CharacterInfo> characters;  // input characters with symbols assigned
};
TilesetExtraction parse_tileset(std::string_view text, const std::vector<CharacterInfo>& characters,
                                Warnings& warnings);

std::vector<Goal> parse_goals(std::string_view text, const TileLegend& legend, int objective_count,
                              Warnings& warnings);

// Ordered, de-duplicated legend symbols under `key`. Unknown symbols are
// dropped with a warning; a cap keeps the first `cap` symbols.
std::vector<Symbol> parse_symbol_list(std::string_view text, std::string_view key, const TileLegend& legend,
                                      std::optional<std::size_t> cap, Warnings& warnings);

std::map<int, Cell> parse_goal_positions(std::string_view text);

struct DirectWorld {
  TileLegend legend;
  std::vector<CharacterInfo> characters;
  ParsedGrid grid;
};
// One-shot output: a JSON block with tiles/walkable/characters and a grid.
DirectWorld parse_direct_world(std::string_view text, Warnings& warnings);

// Context serializations inserted verbatim into prompts.
std::string serialize_characters(const std::vector<CharacterInfo>& characters);
std::string serialize_tile_mapping(const TileLegend& legend);
std::string serialize_goals(const std::vector<Goal>& goals);
std::string serialize_symbols(const std::set<Symbol>& symbols, const TileLegend& legend);

}  // namespace w2w
