#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hybridsum {

using Token = std::string;
using Tokens = std::vector<Token>;
using SampleId = std::string;

/// Space-joined form used by the file formats.
std::string join_tokens(const Tokens& tokens);

/// Splits on single ASCII spaces, dropping empty pieces.
Tokens split_tokens(std::string_view text);

}  // namespace hybridsum
