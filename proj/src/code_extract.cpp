// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "graphdec/errors.hpp"
#include "graphdec/llm_gateway.hpp"

namespace graphdec {

namespace {

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string_view leading_word(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '_')) {
    ++i;
  }
  return line.substr(0, i);
}

bool starts_c_region(std::string_view line) {
  static constexpr std::string_view kTypeTokens[] = {
      "int",      "char",     "short",   "long",   "unsigned", "signed",  "float",
      "double",   "void",     "_Bool",   "bool",   "struct",   "union",   "enum",
      "const",    "volatile", "static",  "extern", "inline",   "register", "typedef",
      "restrict", "size_t",   "ssize_t", "uintptr_t", "intptr_t"};
  if (line.starts_with("#")) return true;
  std::string_view word = leading_word(line);
  if (word.empty()) return false;
  if (std::find(std::begin(kTypeTokens), std::end(kTypeTokens), word) != std::end(kTypeTokens)) {
    return true;
  }
  return word.size() > 2 && word.ends_with("_t");
}

int brace_delta(std::string_view line) {
  int d = 0;
  for (char c : line) {
    if (c == '{') ++d;
    if (c == '}') --d;
  }
  return d;
}

std::string join_lines(const std::vector<std::string_view>& lines, std::size_t first,
                       std::size_t last) {
  std::string out;
  for (std::size_t i = first; i <= last; ++i) {
    out += lines[i];
    out += '\n';
  }
  return out;
}

std::optional<std::string> last_fenced_block(const std::vector<std::string_view>& lines) {
  std::optional<std::string> found;
  std::size_t i = 0;
  while (i < lines.size()) {
    if (!lines[i].starts_with("```")) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < lines.size() && !lines[j].starts_with("```")) ++j;
    std::string body;
    for (std::size_t k = i + 1; k < j; ++k) {
      body += lines[k];
      body += '\n';
    }
    // An unterminated fence (truncated output) still counts as a block.
    if (!is_blank(body)) found = std::move(body);
    i = j + 1;
  }
  return found;
}

std::optional<std::string> longest_c_region(const std::vector<std::string_view>& lines) {
  std::optional<std::string> best;
  std::size_t i = 0;
  while (i < lines.size()) {
    if (!starts_c_region(lines[i])) {
      ++i;
      continue;
    }
    int depth = 0;
    std::size_t last_code = i;
    bool has_code_punct = false;
    std::size_t j = i;
    for (; j < lines.size(); ++j) {
      std::string_view line = lines[j];
      bool continues = depth > 0 || is_blank(line) || starts_c_region(line) ||
                       line.starts_with("{") || line.starts_with("}") ||
                       line.starts_with("//") || line.starts_with("/*") ||
                       std::isspace(static_cast<unsigned char>(line.front())) != 0;
      if (!continues) break;
      depth += brace_delta(line);
      if (depth < 0) depth = 0;
      if (!is_blank(line)) last_code = j;
      if (line.find('{') != std::string_view::npos || line.find(';') != std::string_view::npos) {
        has_code_punct = true;
      }
    }
    if (has_code_punct) {
      std::string region = join_lines(lines, i, last_code);
      if (!best || region.size() > best->size()) best = std::move(region);
    }
    i = std::max(j, i + 1);
  }
  return best;
}

}  // namespace

std::string extract_code(std::string_view text) {
  auto lines = lines_of(text);
  if (auto block = last_fenced_block(lines)) return *block;
  if (auto region = longest_c_region(lines)) return *region;
  throw NoCodeFound("model response contains no C code");
}

std::string extract_code(const ModelResponse& response) {
  if (response.finish_reason == FinishReason::error) {
    throw ContractError("cannot extract code from a failed model response");
  }
  return extract_code(response.text);
}

}  // namespace graphdec
