#include <cstdlib>
#include <thread>

#include "w2w/detail/http.hpp"
#include "w2w/errors.hpp"
#include "w2w/json_io.hpp"
#include "w2w/llm.hpp"
#include "w2w/text.hpp"

namespace w2w {

std::string_view step_name(ExtractionStep step) {
  switch (step) {
    case ExtractionStep::Story: return "story";
    case ExtractionStep::Characters: return "characters";
    case ExtractionStep::Tileset: return "tileset";
    case ExtractionStep::Goals: return "goals";
    case ExtractionStep::ImportantTiles: return "important_tiles";
    case ExtractionStep::WalkableTiles: return "walkable_tiles";
    case ExtractionStep::ObjectTiles: return "object_tiles";
    case ExtractionStep::WorldEnvironment: return "world_environment";
    case ExtractionStep::WorldFull: return "world_full";
    case ExtractionStep::CoherenceJudge: return "coherence_judge";
    case ExtractionStep::AgentActions: return "agent_actions";
    case ExtractionStep::GoalPositions: return "goal_positions";
  }
  return "story";
}

ExtractionStep parse_step(std::string_view name) {
  for (auto step : kAllSteps) {
    if (step_name(step) == name) return step;
  }
  throw ParseFailure("unknown pipeline step '" + std::string(name) + "'");
}

bool is_generation_step(ExtractionStep step) {
  return step != ExtractionStep::CoherenceJudge && step != ExtractionStep::AgentActions &&
         step != ExtractionStep::GoalPositions;
}

std::string ChatRequest::flattened() const {
  std::string out = system_prompt;
  for (const auto& m : messages) {
    if (!out.empty()) out += "\n\n";
    out += m.content;
  }
  return out;
}

MockProvider::MockProvider(std::vector<ScriptEntry> script) : script_(std::move(script)) {
  for (const auto& [step, text] : script_) queues_[step].push_back(text);
}

std::string MockProvider::reply(const ChatRequest& request) {
  if (!request.step) throw PreconditionError("mock provider needs the request's step tag");
  std::lock_guard lock(mutex_);
  recorded_.push_back({*request.step, request});
  auto& queue = queues_[*request.step];
  if (queue.empty()) {
    throw ScriptExhausted("mock script has no response left for step '" + std::string(step_name(*request.step)) +
                          "'");
  }
  auto text = std::move(queue.front());
  queue.pop_front();
  return text;
}

std::vector<MockProvider::Recorded> MockProvider::recorded() const {
  std::lock_guard lock(mutex_);
  return recorded_;
}

std::vector<std::string> MockProvider::prompts_for(ExtractionStep step) const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& r : recorded_) {
    if (r.step == step) out.push_back(r.request.flattened());
  }
  return out;
}

std::size_t MockProvider::remaining(ExtractionStep step) const {
  std::lock_guard lock(mutex_);
  auto it = queues_.find(step);
  return it == queues_.end() ? 0 : it->second.size();
}

std::shared_ptr<MockProvider> MockProvider::fresh_copy() const { return std::make_shared<MockProvider>(script_); }

std::string_view to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::OpenAICompatible: return "openai";
    case ProviderKind::AnthropicCompatible: return "anthropic";
    case ProviderKind::Mock: return "mock";
  }
  return "mock";
}

ProviderKind parse_provider_kind(std::string_view text) {
  const auto t = to_lower(text);
  if (t == "openai" || t == "openai_compatible") return ProviderKind::OpenAICompatible;
  if (t == "anthropic" || t == "anthropic_compatible") return ProviderKind::AnthropicCompatible;
  if (t == "mock") return ProviderKind::Mock;
  throw PreconditionError("unknown provider kind '" + std::string(text) + "'");
}

ProviderConfig default_provider(ProviderKind kind) {
  ProviderConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case ProviderKind::OpenAICompatible:
      cfg.model_name = "gpt-4-turbo-2024-04-09";
      cfg.endpoint_url = "https://api.openai.com/v1/chat/completions";
      cfg.api_key_env_var = "OPENAI_API_KEY";
      break;
    case ProviderKind::AnthropicCompatible:
      cfg.model_name = "claude-3-opus-20240229";
      cfg.endpoint_url = "https://api.anthropic.com/v1/messages";
      cfg.api_key_env_var = "ANTHROPIC_API_KEY";
      break;
    case ProviderKind::Mock:
      cfg.model_name = "mock";
      break;
  }
  return cfg;
}

namespace {

std::string_view role_name(MessageRole role) { return role == MessageRole::User ? "user" : "assistant"; }

Json openai_body(const ProviderConfig& cfg, const ChatRequest& req) {
  Json messages = Json::array();
  if (!req.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
  for (const auto& m : req.messages) messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
  return Json{{"model", cfg.model_name},
              {"messages", messages},
              {"temperature", req.temperature},
              {"max_tokens", req.max_output_tokens}};
}

Json anthropic_body(const ProviderConfig& cfg, const ChatRequest& req) {
  Json messages = Json::array();
  for (const auto& m : req.messages) messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
  Json body{{"model", cfg.model_name},
            {"messages", messages},
            {"temperature", req.temperature},
            {"max_tokens", req.max_output_tokens}};
  if (!req.system_prompt.empty()) body["system"] = req.system_prompt;
  return body;
}

std::string extract_text(ProviderKind kind, const std::string& body) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::exception& e) {
    throw TransportError(std::string("provider returned non-JSON body: ") + e.what());
  }
  try {
    if (kind == ProviderKind::OpenAICompatible) {
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    }
    std::string text;
    for (const auto& block : j.at("content")) {
      if (block.value("type", "text") == "text") text += block.at("text").get<std::string>();
    }
    return text;
  } catch (const Json::exception& e) {
    throw TransportError(std::string("unexpected provider response shape: ") + e.what());
  }
}

}  // namespace

std::string complete(const ProviderConfig& cfg, const ChatRequest& req) {
  if (req.temperature < 0) throw PreconditionError("temperature must be >= 0");
  if (cfg.max_retries_per_call < 0) throw PreconditionError("max_retries_per_call must be >= 0");
  if (cfg.kind == ProviderKind::Mock) {
    if (!cfg.mock) throw PreconditionError("mock provider selected without a script");
    return cfg.mock->reply(req);
  }

  const char* key = cfg.api_key_env_var.empty() ? nullptr : std::getenv(cfg.api_key_env_var.c_str());
  if (key == nullptr || *key == '\0') {
    throw AuthError("API key environment variable '" + cfg.api_key_env_var + "' is not set");
  }

  detail::Headers headers;
  Json body;
  if (cfg.kind == ProviderKind::OpenAICompatible) {
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
    body = openai_body(cfg, req);
  } else {
    headers.emplace_back("x-api-key", key);
    headers.emplace_back("anthropic-version", "2023-06-01");
    body = anthropic_body(cfg, req);
  }

  auto backoff = cfg.retry_backoff;
  for (int attempt = 0;; ++attempt) {
    const bool last = attempt >= cfg.max_retries_per_call;
    detail::HttpResult res;
    try {
      res = detail::post_json(cfg.endpoint_url, headers, body.dump(), cfg.request_timeout);
    } catch (const TransportError&) {
      if (last) throw;
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
      continue;
    }
    if (res.status == 401 || res.status == 403) {
      throw AuthError("provider rejected credentials (HTTP " + std::to_string(res.status) + ")");
    }
    if (res.status == 429 || res.status >= 500) {
      if (last) {
        if (res.status == 429) throw RateLimited("rate limited after " + std::to_string(attempt + 1) + " attempts");
        throw TransportError("HTTP " + std::to_string(res.status) + " after " + std::to_string(attempt + 1) +
                             " attempts");
      }
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
      continue;
    }
    if (res.status < 200 || res.status >= 300) {
      throw TransportError("HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 200));
    }
    return extract_text(cfg.kind, res.body);
  }
}

ProviderConfig mock_script(std::vector<ScriptEntry> responses) {
  auto cfg = default_provider(ProviderKind::Mock);
  cfg.mock = std::make_shared<MockProvider>(std::move(responses));
  return cfg;
}

std::vector<ScriptEntry> load_script_file(const std::string& path) {
  const auto text = read_file(path);
  std::vector<ScriptEntry> script;
  try {
    const auto j = Json::parse(text);
    for (const auto& e : j) script.emplace_back(parse_step(e.at("step").get<std::string>()), e.at("text").get<std::string>());
  } catch (const Json::exception& e) {
    throw ParseFailure("mock script " + path + ": " + e.what());
  }
  return script;
}

std::string script_to_json(const std::vector<ScriptEntry>& script) {
  Json arr = Json::array();
  for (const auto& [step, text] : script) arr.push_back({{"step", step_name(step)}, {"text", text}});
  return dump_json(arr);
}

}  // namespace w2w
