#pragma once

#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "termmatch/rewriting.hpp"
#include "termmatch/syntax.hpp"
#include "termmatch/term.hpp"

namespace termmatch {

struct FileFormatError : TermError {
  using TermError::TermError;
};

namespace detail {

inline std::vector<std::string> split_words(const std::string& line) {
  std::vector<std::string> words;
  std::istringstream iss(line);
  std::string w;
  while (iss >> w) words.push_back(w);
  return words;
}

inline std::string strip_comment(const std::string& line) {
  auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

}  // namespace detail

// Line-oriented signature declarations; `#` starts a comment. Forms:
//   op NAME [arity N] [variadic] [associative] [commutative]
//   class NAME [: PARENT]
//   symbol NAME [: CLASS] [property ...]
inline void load_signatures(std::istream& is, SignatureRegistry& reg) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto words = detail::split_words(detail::strip_comment(line));
    if (words.empty()) continue;
    const std::string what = "line " + std::to_string(lineno) + ": ";
    if (words[0] == "op") {
      if (words.size() < 2) throw FileFormatError(what + "op needs a name");
      OperationSignature sig;
      sig.name = words[1];
      sig.variadic = false;
      for (std::size_t i = 2; i < words.size(); ++i) {
        if (words[i] == "arity") {
          if (++i == words.size()) throw FileFormatError(what + "arity needs a number");
          sig.arity = static_cast<std::size_t>(std::stoul(words[i]));
        } else if (words[i] == "variadic") {
          sig.variadic = true;
        } else if (words[i] == "associative") {
          sig.associative = true;
        } else if (words[i] == "commutative") {
          sig.commutative = true;
        } else {
          throw FileFormatError(what + "unknown op attribute '" + words[i] + "'");
        }
      }
      if (sig.associative && !sig.variadic)
        throw FileFormatError(what + "associative operations must be variadic");
      reg.add_operation(std::move(sig));
    } else if (words[0] == "class") {
      if (words.size() == 2) {
        reg.add_class(words[1]);
      } else if (words.size() == 4 && words[2] == ":") {
        reg.add_class(words[1], words[3]);
      } else {
        throw FileFormatError(what + "expected 'class NAME [: PARENT]'");
      }
    } else if (words[0] == "symbol") {
      if (words.size() < 2) throw FileFormatError(what + "symbol needs a name");
      SymbolInfo info;
      std::size_t i = 2;
      if (i < words.size() && words[i] == ":") {
        if (++i == words.size()) throw FileFormatError(what + "':' needs a class name");
        info.class_tag = words[i++];
      }
      for (; i < words.size(); ++i) info.properties.push_back(words[i]);
      std::sort(info.properties.begin(), info.properties.end());
      reg.declare_symbol(words[1], std::move(info));
    } else {
      throw FileFormatError(what + "unknown declaration '" + words[0] + "'");
    }
  }
}

inline SignatureRegistry load_signature_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FileFormatError("cannot open signature file '" + path + "'");
  SignatureRegistry reg;
  load_signatures(f, reg);
  return reg;
}

// Constraint mini-language:
//   expr     := clause { ("and" | "&&") clause }
//   clause   := value cmp value | has_property(VAR, "prop")
//   value    := INTEGER | VAR | sum(VAR)
//   cmp      := < | <= | > | >= | == | !=
// Variables evaluate to the integer named by their bound symbol; sum(x) adds
// up a sequence binding. The predicate is false (not an error) when a bound
// term has no integer value.
class ConstraintExprParser {
 public:
  explicit ConstraintExprParser(std::string text) : text_(std::move(text)) {}

  Constraint parse() {
    std::vector<Clause> clauses;
    clauses.push_back(parse_clause());
    for (;;) {
      skip_ws();
      if (try_word("and") || try_symbol("&&")) {
        clauses.push_back(parse_clause());
        continue;
      }
      break;
    }
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input in constraint");
    std::vector<std::string> required;
    for (const auto& c : clauses)
      for (const auto& v : c.variables) required.push_back(v);
    std::sort(required.begin(), required.end());
    required.erase(std::unique(required.begin(), required.end()), required.end());
    auto predicate = [clauses](const Substitution& sigma) {
      for (const auto& c : clauses)
        if (!c.eval(sigma)) return false;
      return true;
    };
    return make_constraint(std::move(required), std::move(predicate), text_);
  }

 private:
  enum class Cmp { Lt, Le, Gt, Ge, Eq, Ne };

  struct Value {
    enum class Kind { Literal, Var, Sum } kind = Kind::Literal;
    long long literal = 0;
    std::string var;

    std::optional<long long> eval(const Substitution& sigma) const {
      if (kind == Kind::Literal) return literal;
      const Binding* b = sigma.find(var);
      if (!b) return std::nullopt;
      if (kind == Kind::Var) {
        if (b->is_sequence || b->terms.size() != 1) return std::nullopt;
        return symbol_value(b->terms[0]);
      }
      long long total = 0;
      for (const auto& t : b->terms) {
        auto v = symbol_value(t);
        if (!v) return std::nullopt;
        total += *v;
      }
      return total;
    }

    static std::optional<long long> symbol_value(const TermPtr& t) {
      if (t->kind != TermKind::Symbol || t->name.empty()) return std::nullopt;
      for (char c : t->name)
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
      return std::stoll(t->name);
    }
  };

  struct Clause {
    bool is_property = false;
    Value lhs, rhs;
    Cmp cmp = Cmp::Eq;
    std::string property_var, property_name;
    std::vector<std::string> variables;

    bool eval(const Substitution& sigma) const {
      if (is_property) {
        const Binding* b = sigma.find(property_var);
        if (!b || b->is_sequence || b->terms.size() != 1) return false;
        return b->terms[0]->has_property(property_name);
      }
      auto l = lhs.eval(sigma);
      auto r = rhs.eval(sigma);
      if (!l || !r) return false;
      switch (cmp) {
        case Cmp::Lt: return *l < *r;
        case Cmp::Le: return *l <= *r;
        case Cmp::Gt: return *l > *r;
        case Cmp::Ge: return *l >= *r;
        case Cmp::Eq: return *l == *r;
        case Cmp::Ne: return *l != *r;
      }
      return false;
    }
  };

  Clause parse_clause() {
    skip_ws();
    std::size_t mark = pos_;
    std::string word = lex_identifier();
    if (word == "has_property") {
      Clause c;
      c.is_property = true;
      expect('(');
      c.property_var = lex_identifier();
      if (c.property_var.empty()) fail("has_property needs a variable name");
      expect(',');
      c.property_name = lex_string();
      expect(')');
      c.variables.push_back(c.property_var);
      return c;
    }
    pos_ = mark;
    Clause c;
    c.lhs = parse_value(c.variables);
    c.cmp = parse_cmp();
    c.rhs = parse_value(c.variables);
    return c;
  }

  Value parse_value(std::vector<std::string>& variables) {
    skip_ws();
    if (pos_ < text_.size() &&
        (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '-')) {
      std::size_t start = pos_;
      if (text_[pos_] == '-') ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ == start + (text_[start] == '-' ? 1u : 0u)) fail("expected number");
      Value v;
      v.kind = Value::Kind::Literal;
      v.literal = std::stoll(text_.substr(start, pos_ - start));
      return v;
    }
    std::string name = lex_identifier();
    if (name.empty()) fail("expected value");
    Value v;
    if (name == "sum") {
      expect('(');
      v.kind = Value::Kind::Sum;
      v.var = lex_identifier();
      if (v.var.empty()) fail("sum needs a variable name");
      expect(')');
    } else {
      v.kind = Value::Kind::Var;
      v.var = name;
    }
    variables.push_back(v.var);
    return v;
  }

  Cmp parse_cmp() {
    skip_ws();
    if (try_symbol("<=")) return Cmp::Le;
    if (try_symbol(">=")) return Cmp::Ge;
    if (try_symbol("==")) return Cmp::Eq;
    if (try_symbol("!=")) return Cmp::Ne;
    if (try_symbol("<")) return Cmp::Lt;
    if (try_symbol(">")) return Cmp::Gt;
    fail("expected comparison operator");
    return Cmp::Eq;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string lex_identifier() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                   text_[pos_] == '_'))
      ++pos_;
    return text_.substr(start, pos_ - start);
  }

  std::string lex_string() {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != '"') fail("expected quoted string");
    ++pos_;
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') ++pos_;
    if (pos_ >= text_.size()) fail("unterminated string");
    return text_.substr(start, pos_++ - start);
  }

  bool try_symbol(const std::string& s) {
    skip_ws();
    if (text_.compare(pos_, s.size(), s) == 0) {
      pos_ += s.size();
      return true;
    }
    return false;
  }

  bool try_word(const std::string& w) {
    skip_ws();
    if (text_.compare(pos_, w.size(), w) != 0) return false;
    std::size_t end = pos_ + w.size();
    if (end < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[end])) ||
                               text_[end] == '_'))
      return false;
    pos_ = end;
    return true;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c)
      fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw FileFormatError(msg + " at offset " + std::to_string(pos_) + " in constraint '" +
                          text_ + "'");
  }

  std::string text_;
  std::size_t pos_ = 0;
};

inline Constraint parse_constraint(const std::string& text) {
  return ConstraintExprParser(text).parse();
}

// `pattern | constraint` as a single string, as accepted on the command line.
inline Pattern parse_pattern_string(const std::string& text, SignatureRegistry& reg) {
  auto bar = text.find('|');
  Pattern p(parse_term(bar == std::string::npos ? text : text.substr(0, bar), reg));
  if (bar != std::string::npos) p.constraints.push_back(parse_constraint(text.substr(bar + 1)));
  return p;
}

// Rules file: one `pattern [| constraint] => template` per line; `#` comments.
inline std::vector<ReplacementRule> load_rules(std::istream& is, SignatureRegistry& reg) {
  std::vector<ReplacementRule> rules;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string body = detail::strip_comment(line);
    if (body.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto arrow = body.find("=>");
    if (arrow == std::string::npos)
      throw FileFormatError("line " + std::to_string(lineno) + ": missing '=>'");
    Pattern p = parse_pattern_string(body.substr(0, arrow), reg);
    TermPtr tmpl = parse_term(body.substr(arrow + 2), reg);
    rules.push_back(make_template_rule(std::move(p), std::move(tmpl)));
  }
  return rules;
}

inline std::vector<ReplacementRule> load_rules_file(const std::string& path,
                                                    SignatureRegistry& reg) {
  std::ifstream f(path);
  if (!f) throw FileFormatError("cannot open rules file '" + path + "'");
  return load_rules(f, reg);
}

}  // namespace termmatch
