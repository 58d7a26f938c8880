#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "palop/error.hpp"

namespace palop::pddl {

// A parenthesised token tree with source positions, the raw shape of PDDL.
struct SExpr {
  bool is_list = false;
  std::string token;
  std::vector<SExpr> items;
  std::size_t line = 1;
  std::size_t column = 1;

  bool is_token(std::string_view t) const { return !is_list && token == t; }
  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(line, column, message);
  }
};

class SExprReader {
 public:
  explicit SExprReader(std::string_view text) : text_(text) {}

  std::vector<SExpr> read_all() {
    std::vector<SExpr> out;
    skip_space();
    while (pos_ < text_.size()) {
      out.push_back(read());
      skip_space();
    }
    return out;
  }

 private:
  SExpr read() {
    skip_space();
    if (pos_ >= text_.size()) {
      throw ParseError(line_, column_, "unexpected end of input");
    }
    SExpr e;
    e.line = line_;
    e.column = column_;
    char c = text_[pos_];
    if (c == ')') throw ParseError(line_, column_, "unexpected ')'");
    if (c == '(') {
      e.is_list = true;
      advance();
      for (;;) {
        skip_space();
        if (pos_ >= text_.size()) {
          throw ParseError(e.line, e.column, "unclosed '('");
        }
        if (text_[pos_] == ')') {
          advance();
          break;
        }
        e.items.push_back(read());
      }
      return e;
    }
    while (pos_ < text_.size()) {
      char ch = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(ch)) || ch == '(' ||
          ch == ')' || ch == ';') {
        break;
      }
      e.token.push_back(ch);
      advance();
    }
    return e;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

}  // namespace palop::pddl
