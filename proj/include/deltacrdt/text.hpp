#pragma once

#include <cctype>
#include <charconv>
#include <concepts>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace dcrdt {

/// Forward-only reader over a state representation such as "{r1:1, r3:2}" or "({a}, {})".
class text_cursor {
 public:
  explicit text_cursor(std::string_view text) : text_(text) {}

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }

  bool consume(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }

  bool peek(char c) {
    skip_space();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  /// Reads a run of token characters: letters, digits, '_', '.', '-'.
  std::string_view token() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_token_char(text_[pos_])) ++pos_;
    if (start == pos_) fail("expected a token");
    return text_.substr(start, pos_ - start);
  }

  std::uint64_t number() {
    const auto tok = token();
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) fail("expected a non-negative integer");
    return value;
  }

  std::size_t position() const noexcept { return pos_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw parse_error(1, pos_ + 1, what + " in \"" + std::string(text_) + "\"");
  }

  static bool is_token_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

inline bool is_token(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!text_cursor::is_token_char(c)) return false;
  }
  return true;
}

/// Textual form of G-Set elements. Specialise for other element types.
template <class E>
struct element_traits;

template <>
struct element_traits<std::string> {
  static std::string format(const std::string& e) { return e; }
  static std::string parse(text_cursor& in) { return std::string(in.token()); }
};

template <std::integral I>
struct element_traits<I> {
  static std::string format(I e) { return std::to_string(e); }
  static I parse(text_cursor& in) {
    const auto tok = in.token();
    I value{};
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) in.fail("expected an integer element");
    return value;
  }
};

}  // namespace dcrdt
