#include "w2w/prompts.hpp"

#include <cstdlib>
#include <filesystem>

#include "w2w/errors.hpp"
#include "w2w/text.hpp"

#ifndef W2W_DEFAULT_TEMPLATE_DIR
#define W2W_DEFAULT_TEMPLATE_DIR "templates"
#endif

namespace w2w {

namespace {

template <typename OnText, typename OnKey>
void scan_template(std::string_view tmpl, OnText&& on_text, OnKey&& on_key) {
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    on_text(tmpl.substr(pos, open - pos));
    on_key(trim(tmpl.substr(open + 2, close - open - 2)));
    pos = close + 2;
  }
  on_text(tmpl.substr(pos));
}

}  // namespace

std::string render_template(std::string_view tmpl, const PromptContext& ctx) {
  std::string out;
  scan_template(
      tmpl, [&](std::string_view text) { out += text; },
      [&](const std::string& key) {
        auto it = ctx.find(key);
        if (it == ctx.end()) throw PreconditionError("prompt context is missing '" + key + "'");
        out += it->second;
      });
  return out;
}

std::vector<std::string> template_placeholders(std::string_view tmpl) {
  std::vector<std::string> keys;
  scan_template(tmpl, [](std::string_view) {}, [&](const std::string& key) { keys.push_back(key); });
  return keys;
}

TemplateStore::TemplateStore(std::string dir) : dir_(std::move(dir)) {}

std::string TemplateStore::get(std::string_view name) const {
  std::lock_guard lock(cache_->mutex);
  if (auto it = cache_->entries.find(name); it != cache_->entries.end()) return it->second;
  const auto path = (std::filesystem::path(dir_) / (std::string(name) + ".txt")).string();
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError&) {
    throw IoError("prompt template not found: " + path);
  }
  // Files end with a newline; prompts should not.
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  cache_->entries.emplace(std::string(name), text);
  return text;
}

std::string TemplateStore::render(std::string_view name, const PromptContext& ctx) const {
  try {
    return render_template(get(name), ctx);
  } catch (const PreconditionError& e) {
    throw PreconditionError("template '" + std::string(name) + "': " + e.what());
  }
}

std::string default_template_dir() {
  if (const char* env = std::getenv("W2W_TEMPLATES"); env && *env) return env;
  return W2W_DEFAULT_TEMPLATE_DIR;
}

}  // namespace w2w
