#pragma once

#include <string_view>
#include <vector>

#include "hybridsum/tokens.hpp"

namespace hybridsum {

struct PreprocessConfig {
  bool split_camel = true;
  bool split_underscore = true;
  bool strip_non_alpha = true;
  bool lowercase = true;
  /// Comment token subsequences marking auto-generated code.
  std::vector<Tokens> auto_generated_patterns = default_auto_generated_patterns();

  static std::vector<Tokens> default_auto_generated_patterns() {
    return {{"generated", "by"}, {"auto", "generated"}};
  }
};

/// Turns raw code or comment text into lowercase alphabetic tokens.
///
/// Whitespace always separates tokens. With `strip_non_alpha`, every other
/// non-letter (digits, symbols, non-ASCII code points) is removed and acts as
/// a separator. Underscores separate when `split_underscore` is set, and
/// identifiers are split at lower->upper and acronym->word boundaries
/// ("HTMLParser" -> html, parser) when `split_camel` is set.
///
/// Throws DecodeError naming the byte offset of the first invalid UTF-8 sequence.
Tokens preprocess(std::string_view raw_text, const PreprocessConfig& cfg = {});

}  // namespace hybridsum
