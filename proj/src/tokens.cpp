#include "hybridsum/tokens.hpp"

namespace hybridsum {

std::string join_tokens(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Tokens split_tokens(std::string_view text) {
  Tokens out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t next = text.find(' ', pos);
    const std::size_t end = next == std::string_view::npos ? text.size() : next;
    if (end > pos) out.emplace_back(text.substr(pos, end - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace hybridsum
