#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace w2w {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Splits on '\n', dropping a trailing '\r' from each line. "a\n" yields {"a", ""}.
std::vector<std::string> split_lines(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

struct FencedBlock {
  std::string info;  // text after the opening ``` (language tag), trimmed
  std::string body;
};

// Markdown ``` blocks in order of appearance. An unterminated final fence
// runs to the end of the text.
std::vector<FencedBlock> fenced_blocks(std::string_view text);

// Lines of text that are not inside (or part of) a fenced block.
std::vector<std::string> strip_fenced_blocks(std::string_view text);

// First run of decimal digits, with a directly preceding '-' taken as a sign.
std::optional<long long> first_integer(std::string_view text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace w2w
