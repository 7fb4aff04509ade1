#include "w2w/text.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "w2w/errors.hpp"

namespace w2w {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (true) {
    const auto nl = text.find('\n', start);
    auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

namespace {

bool is_fence(std::string_view line) {
  const auto t = trim(line);
  return t.rfind("```", 0) == 0;
}

}  // namespace

std::vector<FencedBlock> fenced_blocks(std::string_view text) {
  std::vector<FencedBlock> blocks;
  std::optional<FencedBlock> open;
  std::vector<std::string> body;
  for (const auto& line : split_lines(text)) {
    if (is_fence(line)) {
      if (!open) {
        open = FencedBlock{trim(trim(line).substr(3)), {}};
        body.clear();
      } else {
        open->body = join(body, "\n");
        blocks.push_back(std::move(*open));
        open.reset();
      }
      continue;
    }
    if (open) body.push_back(line);
  }
  if (open) {
    open->body = join(body, "\n");
    blocks.push_back(std::move(*open));
  }
  return blocks;
}

std::vector<std::string> strip_fenced_blocks(std::string_view text) {
  std::vector<std::string> out;
  bool inside = false;
  for (const auto& line : split_lines(text)) {
    if (is_fence(line)) {
      inside = !inside;
      continue;
    }
    if (!inside) out.push_back(line);
  }
  return out;
}

std::optional<long long> first_integer(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) continue;
    const bool negative = i > 0 && text[i - 1] == '-';
    long long value = 0;
    std::size_t j = i;
    for (; j < text.size() && std::isdigit(static_cast<unsigned char>(text[j])); ++j) {
      if (value < 1'000'000'000'000LL) value = value * 10 + (text[j] - '0');
    }
    return negative ? -value : value;
  }
  return std::nullopt;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace w2w
