#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace w2w {

using PromptContext = std::map<std::string, std::string>;

// Substitutes every {{name}} with ctx[name]. A placeholder without a context
// value is a precondition violation, so no prompt silently loses context.
std::string render_template(std::string_view tmpl, const PromptContext& ctx);
std::vector<std::string> template_placeholders(std::string_view tmpl);

// Plain-text prompt templates, one <name>.txt per file, read on first use.
class TemplateStore {
 public:
  explicit TemplateStore(std::string dir);

  const std::string& dir() const { return dir_; }
  std::string get(std::string_view name) const;
  std::string render(std::string_view name, const PromptContext& ctx) const;

 private:
  std::string dir_;
  struct Cache {
    std::mutex mutex;
    std::map<std::string, std::string, std::less<>> entries;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

// $W2W_TEMPLATES if set, else the templates directory of the source tree.
std::string default_template_dir();

}  // namespace w2w
