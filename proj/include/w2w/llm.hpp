#pragma once

#include <chrono>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace w2w {

// Every kind of prompt the engine issues. The first nine are the generation
// plan; the rest belong to evaluation and the agent.
enum class ExtractionStep {
  Story,
  Characters,
  Tileset,
  Goals,
  ImportantTiles,
  WalkableTiles,
  ObjectTiles,
  WorldEnvironment,
  WorldFull,
  CoherenceJudge,
  AgentActions,
  GoalPositions,
};

inline constexpr ExtractionStep kAllSteps[] = {
    ExtractionStep::Story,          ExtractionStep::Characters,     ExtractionStep::Tileset,
    ExtractionStep::Goals,          ExtractionStep::ImportantTiles, ExtractionStep::WalkableTiles,
    ExtractionStep::ObjectTiles,    ExtractionStep::WorldEnvironment, ExtractionStep::WorldFull,
    ExtractionStep::CoherenceJudge, ExtractionStep::AgentActions,   ExtractionStep::GoalPositions,
};

std::string_view step_name(ExtractionStep step);
// Accepts the snake_case names produced by step_name.
ExtractionStep parse_step(std::string_view name);
bool is_generation_step(ExtractionStep step);

enum class MessageRole { User, Assistant };

struct ChatMessage {
  MessageRole role = MessageRole::User;
  std::string content;
};

struct ChatRequest {
  std::string system_prompt;
  std::vector<ChatMessage> messages;
  double temperature = 1.0;
  int max_output_tokens = 4096;
  // Routes mock replies; ignored by remote providers.
  std::optional<ExtractionStep> step;

  // System prompt and every message, blank-line separated.
  std::string flattened() const;
};

using ScriptEntry = std::pair<ExtractionStep, std::string>;

// Scripted provider: replies to each step from its own FIFO queue and
// records every request it receives.
class MockProvider {
 public:
  struct Recorded {
    ExtractionStep step;
    ChatRequest request;
  };

  explicit MockProvider(std::vector<ScriptEntry> script);

  std::string reply(const ChatRequest& request);

  std::vector<Recorded> recorded() const;
  std::vector<std::string> prompts_for(ExtractionStep step) const;
  std::size_t remaining(ExtractionStep step) const;
  // Same script, empty recording, rewound queues.
  std::shared_ptr<MockProvider> fresh_copy() const;
  const std::vector<ScriptEntry>& script() const { return script_; }

 private:
  std::vector<ScriptEntry> script_;
  mutable std::mutex mutex_;
  std::map<ExtractionStep, std::deque<std::string>> queues_;
  std::vector<Recorded> recorded_;
};

enum class ProviderKind { OpenAICompatible, AnthropicCompatible, Mock };

std::string_view to_string(ProviderKind kind);
ProviderKind parse_provider_kind(std::string_view text);

struct ProviderConfig {
  ProviderKind kind = ProviderKind::Mock;
  std::string model_name;
  std::string endpoint_url;
  std::string api_key_env_var;
  std::chrono::milliseconds request_timeout{60'000};
  int max_retries_per_call = 3;
  // First retry waits this long, doubling after each attempt.
  std::chrono::milliseconds retry_backoff{500};
  std::shared_ptr<MockProvider> mock;
};

// Fills endpoint and key variable defaults for the provider kind.
ProviderConfig default_provider(ProviderKind kind);

// One chat completion. Remote kinds read the API key from the environment
// and retry 5xx/transport failures and 429s with exponential backoff.
std::string complete(const ProviderConfig& cfg, const ChatRequest& req);

ProviderConfig mock_script(std::vector<ScriptEntry> responses);

// JSON array of {"step": "...", "text": "..."} objects.
std::vector<ScriptEntry> load_script_file(const std::string& path);
std::string script_to_json(const std::vector<ScriptEntry>& script);

}  // namespace w2w
