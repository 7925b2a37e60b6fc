#include "hybridsum/preprocess.hpp"

#include <cstdint>

#include "hybridsum/error.hpp"

namespace hybridsum {
namespace {

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_alpha(char32_t c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }

bool is_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' ||
         c == 0x00A0 || c == 0x2028 || c == 0x2029;
}

// Decodes one code point starting at `pos`, advancing it. Rejects overlong
// forms, surrogates and values above U+10FFFF.
char32_t decode_one(std::string_view text, std::size_t& pos) {
  const std::size_t start = pos;
  const auto lead = static_cast<unsigned char>(text[pos]);
  int extra = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    ++pos;
    return lead;
  } else if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    throw DecodeError(start, "invalid UTF-8 lead byte");
  }
  if (pos + extra >= text.size()) {
    throw DecodeError(start, "truncated UTF-8 sequence");
  }
  for (int i = 1; i <= extra; ++i) {
    const auto cont = static_cast<unsigned char>(text[pos + i]);
    if ((cont & 0xC0) != 0x80) throw DecodeError(start, "invalid UTF-8 continuation byte");
    cp = (cp << 6) | (cont & 0x3F);
  }
  static constexpr char32_t kMin[] = {0, 0x80, 0x800, 0x10000};
  if (cp < kMin[extra]) throw DecodeError(start, "overlong UTF-8 sequence");
  if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    throw DecodeError(start, "invalid Unicode scalar value");
  }
  pos += extra + 1;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

void emit(std::string piece, bool lowercase, Tokens& out) {
  if (piece.empty()) return;
  if (lowercase) {
    for (char& c : piece) {
      if (is_upper(c)) c = static_cast<char>(c - 'A' + 'a');
    }
  }
  out.push_back(std::move(piece));
}

// getUserName -> get|User|Name, HTMLParser -> HTML|Parser, parseXML -> parse|XML
void flush(std::string& piece, const PreprocessConfig& cfg, Tokens& out) {
  if (piece.empty()) return;
  if (!cfg.split_camel) {
    emit(std::move(piece), cfg.lowercase, out);
    piece.clear();
    return;
  }
  std::size_t begin = 0;
  for (std::size_t i = 1; i < piece.size(); ++i) {
    const char prev = piece[i - 1];
    const char cur = piece[i];
    const bool lower_to_upper = is_lower(prev) && is_upper(cur);
    const bool acronym_end =
        is_upper(prev) && is_upper(cur) && i + 1 < piece.size() && is_lower(piece[i + 1]);
    if (lower_to_upper || acronym_end) {
      emit(piece.substr(begin, i - begin), cfg.lowercase, out);
      begin = i;
    }
  }
  emit(piece.substr(begin), cfg.lowercase, out);
  piece.clear();
}

}  // namespace

Tokens preprocess(std::string_view raw_text, const PreprocessConfig& cfg) {
  Tokens out;
  std::string piece;
  std::size_t pos = 0;
  while (pos < raw_text.size()) {
    const char32_t cp = decode_one(raw_text, pos);
    if (is_space(cp)) {
      flush(piece, cfg, out);
    } else if (cp == U'_') {
      if (cfg.split_underscore) {
        flush(piece, cfg, out);
      } else if (!cfg.strip_non_alpha) {
        piece.push_back('_');
      }
    } else if (is_alpha(cp)) {
      piece.push_back(static_cast<char>(cp));
    } else if (cfg.strip_non_alpha) {
      flush(piece, cfg, out);
    } else {
      append_utf8(piece, cp);
    }
  }
  flush(piece, cfg, out);
  return out;
}

}  // namespace hybridsum
