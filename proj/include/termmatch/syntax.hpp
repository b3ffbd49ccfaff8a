#pragma once

#include <cctype>
#include <sstream>
#include <string>

#include "termmatch/term.hpp"

namespace termmatch {

struct ParseError : TermError {
  std::size_t line, column;
  ParseError(const std::string& msg, std::size_t line_, std::size_t column_)
      : TermError(msg + " at line " + std::to_string(line_) + ", column " +
                  std::to_string(column_)),
        line(line_),
        column(column_) {}
};

// Grammar: identifiers [A-Za-z][A-Za-z0-9]* or integer literals; application
// f(t1, t2, ...); wildcards x_ / x__ / x___, anonymous _ / __ / ___,
// class-restricted dot A_:Matrix. Whitespace insignificant.
class TermParser {
 public:
  TermParser(std::string text, SignatureRegistry& registry)
      : text_(std::move(text)), reg_(registry) {}

  TermPtr parse() {
    TermPtr t = parse_term();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input");
    return canonicalize(t);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      advance();
  }

  bool peek_is(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    if (!peek_is(c)) fail(std::string("expected '") + c + "'");
    advance();
  }

  std::string lex_name() {
    skip_ws();
    if (pos_ >= text_.size()) return "";
    std::string out;
    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c))) {
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) {
        out += text_[pos_];
        advance();
      }
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        out += text_[pos_];
        advance();
      }
    }
    return out;
  }

  int lex_underscores() {
    int n = 0;
    while (pos_ < text_.size() && text_[pos_] == '_' && n < 3) {
      ++n;
      advance();
    }
    return n;
  }

  TermPtr parse_term() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    std::string name = lex_name();
    int underscores = lex_underscores();
    if (name.empty() && underscores == 0) fail("expected term");
    if (underscores > 0) {
      WildcardKind kind = underscores == 1   ? WildcardKind::Dot
                          : underscores == 2 ? WildcardKind::Plus
                                             : WildcardKind::Star;
      std::string restriction;
      if (peek_is(':')) {
        advance();
        restriction = lex_name();
        if (restriction.empty()) fail("expected class name after ':'");
        if (kind != WildcardKind::Dot) fail("class restriction requires a dot wildcard");
      }
      return make_wildcard(kind, name, restriction);
    }
    if (peek_is('(')) {
      advance();
      TermList args;
      if (!peek_is(')')) {
        args.push_back(parse_term());
        while (peek_is(',')) {
          advance();
          args.push_back(parse_term());
        }
      }
      expect(')');
      return make_application(reg_.get_or_default(name), std::move(args));
    }
    const SymbolInfo* info = reg_.find_symbol(name);
    if (info) return make_symbol(name, info->class_tag, info->properties);
    return make_symbol(name);
  }

  std::string text_;
  SignatureRegistry& reg_;
  std::size_t pos_ = 0, line_ = 1, col_ = 1;
};

// Parses and canonicalizes; unknown operations are registered with default
// attributes (variadic, neither associative nor commutative).
inline TermPtr parse_term(const std::string& text, SignatureRegistry& registry) {
  return TermParser(text, registry).parse();
}

inline void format_term_into(const TermPtr& t, std::string& out) {
  switch (t->kind) {
    case TermKind::Symbol:
      out += t->name;
      break;
    case TermKind::Wildcard:
      out += t->name;
      switch (t->wkind) {
        case WildcardKind::Dot: out += "_"; break;
        case WildcardKind::Plus: out += "__"; break;
        case WildcardKind::Star: out += "___"; break;
      }
      if (!t->class_tag.empty()) {
        out += ':';
        out += t->class_tag;
      }
      break;
    case TermKind::Application: {
      out += t->sig->name;
      out += '(';
      for (std::size_t i = 0; i < t->args.size(); ++i) {
        if (i) out += ", ";
        format_term_into(t->args[i], out);
      }
      out += ')';
      break;
    }
  }
}

inline std::string format_term(const TermPtr& t) {
  std::string out;
  format_term_into(t, out);
  return out;
}

// Canonical text form: {x -> a, y -> (b, c)} sorted by variable name.
inline std::string format_substitution(const Substitution& sigma) {
  std::string out = "{";
  bool first = true;
  for (const auto& [name, b] : sigma.bindings()) {
    if (!first) out += ", ";
    first = false;
    out += name;
    out += " -> ";
    if (b.is_sequence) {
      out += '(';
      for (std::size_t i = 0; i < b.terms.size(); ++i) {
        if (i) out += ", ";
        format_term_into(b.terms[i], out);
      }
      out += ')';
    } else {
      format_term_into(b.terms[0], out);
    }
  }
  out += '}';
  return out;
}

}  // namespace termmatch
