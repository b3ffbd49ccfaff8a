#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "termmatch/term.hpp"

namespace termmatch {

struct UnsupportedPatternError : TermError {
  using TermError::TermError;
};

struct NetTooLargeError : TermError {
  using TermError::TermError;
};

// Recovers bindings for a syntactic pattern against a ground subject; used
// after the deterministic net has narrowed down the candidate patterns (the
// net ignores nonlinear variables and class restrictions, so candidates are a
// superset).
inline bool match_syntactic(const TermPtr& subject, const TermPtr& pattern,
                            const SignatureRegistry& reg, Substitution& sigma) {
  switch (pattern->kind) {
    case TermKind::Symbol:
      return term_equal(subject, pattern);
    case TermKind::Wildcard:
      if (!pattern->class_tag.empty() &&
          (subject->kind != TermKind::Symbol ||
           !reg.class_is_a(subject->class_tag, pattern->class_tag)))
        return false;
      if (pattern->name.empty()) return true;
      return sigma.bind(pattern->name, Binding::single(subject));
    case TermKind::Application:
      if (subject->kind != TermKind::Application || subject->sig != pattern->sig ||
          subject->args.size() != pattern->args.size())
        return false;
      for (std::size_t i = 0; i < pattern->args.size(); ++i)
        if (!match_syntactic(subject->args[i], pattern->args[i], reg, sigma)) return false;
      return true;
  }
  return false;
}

// Deterministic discrimination net over syntactic patterns. Terms are read as
// preorder token streams; a net state is a memoized set of per-pattern
// positions (with a skip counter for subterms swallowed by a wildcard), and
// transitions are built lazily per (state, input token). Matching a subject
// is then a single deterministic pass.
class DeterministicNet {
 public:
  explicit DeterministicNet(const SignatureRegistry& reg, std::size_t state_budget = 100000)
      : reg_(&reg), state_budget_(state_budget) {}

  int add_pattern(Pattern p) {
    p.expression = canonicalize(p.expression);
    if (!is_syntactic(p))
      throw UnsupportedPatternError(
          "deterministic nets require syntactic, constraint-free patterns");
    const int id = static_cast<int>(patterns_.size());
    std::vector<Token> tokens;
    tokenize(p.expression, tokens);
    tokens_.push_back(std::move(tokens));
    patterns_.push_back(std::move(p));
    // previously memoized states are stale once the pattern set changes
    states_.clear();
    state_ids_.clear();
    delta_.clear();
    start_ = -1;
    return id;
  }

  bool match(const TermPtr& subject,
             const std::function<bool(int, const Substitution&)>& sink) const {
    if (!is_ground(subject)) throw InvalidSubjectError("subject must be ground");
    TermPtr s = canonicalize(subject);

    int state = start_state();
    // preorder walk of the subject, feeding one token per node
    std::vector<const Term*> stack{s.get()};
    while (!stack.empty()) {
      const Term* t = stack.back();
      stack.pop_back();
      state = step(state, *t);
      if (states_[static_cast<std::size_t>(state)].empty()) return true;  // dead
      if (t->kind == TermKind::Application)
        for (auto it = t->args.rbegin(); it != t->args.rend(); ++it) stack.push_back(it->get());
    }
    for (const auto& item : states_[static_cast<std::size_t>(state)]) {
      if (item.skip != 0 || item.pos != tokens_[static_cast<std::size_t>(item.pid)].size())
        continue;
      Substitution sigma;
      if (!match_syntactic(s, patterns_[static_cast<std::size_t>(item.pid)].expression, *reg_,
                           sigma))
        continue;
      if (!sink(item.pid, sigma)) return false;
    }
    return true;
  }

  std::vector<std::pair<int, Substitution>> match_all(const TermPtr& subject) const {
    std::vector<std::pair<int, Substitution>> out;
    match(subject, [&](int pid, const Substitution& sigma) {
      out.emplace_back(pid, sigma);
      return true;
    });
    return out;
  }

  const std::vector<Pattern>& patterns() const { return patterns_; }
  std::size_t state_count() const { return states_.size(); }

 private:
  struct Token {
    enum class Kind : char { Symbol = 'S', Operation = 'O', Any = 'W' };
    Kind kind;
    std::string name;       // symbol or operation name
    std::size_t children = 0;  // argument count for operations

    std::string key() const {
      return std::string(1, static_cast<char>(kind)) + name + '/' + std::to_string(children);
    }
  };

  struct Item {
    int pid;
    std::size_t pos;   // next token in the pattern stream
    std::size_t skip;  // pending subterms swallowed by a wildcard

    friend bool operator<(const Item& a, const Item& b) {
      return std::tie(a.pid, a.pos, a.skip) < std::tie(b.pid, b.pos, b.skip);
    }
    friend bool operator==(const Item& a, const Item& b) {
      return a.pid == b.pid && a.pos == b.pos && a.skip == b.skip;
    }
  };

  using ItemSet = std::vector<Item>;  // sorted, unique

  static void tokenize(const TermPtr& t, std::vector<Token>& out) {
    switch (t->kind) {
      case TermKind::Symbol:
        out.push_back({Token::Kind::Symbol, t->name, 0});
        return;
      case TermKind::Wildcard:
        out.push_back({Token::Kind::Any, "", 0});
        return;
      case TermKind::Application:
        out.push_back({Token::Kind::Operation, t->sig->name, t->args.size()});
        for (const auto& a : t->args) tokenize(a, out);
        return;
    }
  }

  int start_state() const {
    if (start_ != -1) return start_;
    ItemSet items;
    for (std::size_t pid = 0; pid < patterns_.size(); ++pid)
      items.push_back({static_cast<int>(pid), 0, 0});
    start_ = intern(std::move(items));
    return start_;
  }

  int intern(ItemSet items) const {
    std::string key;
    for (const auto& it : items) {
      key += std::to_string(it.pid);
      key += ',';
      key += std::to_string(it.pos);
      key += ',';
      key += std::to_string(it.skip);
      key += ';';
    }
    auto [slot, inserted] = state_ids_.emplace(std::move(key), 0);
    if (!inserted) return slot->second;
    if (states_.size() >= state_budget_) {
      state_ids_.erase(slot);
      throw NetTooLargeError("deterministic net exceeds the state budget");
    }
    slot->second = static_cast<int>(states_.size());
    states_.push_back(std::move(items));
    delta_.emplace_back();
    return slot->second;
  }

  // dense ids for input tokens; lookups on the hot path allocate nothing
  int token_id(bool is_op, const std::string& name, std::size_t children) const {
    if (!is_op) {
      auto [slot, inserted] = sym_ids_.emplace(name, 0);
      if (inserted) slot->second = next_token_id_++;
      return slot->second;
    }
    auto [slot, inserted] = op_ids_[name].emplace(children, 0);
    if (inserted) slot->second = next_token_id_++;
    return slot->second;
  }

  int step(int state, const Term& t) const {
    const bool is_op = t.kind == TermKind::Application;
    const std::string& name = is_op ? t.sig->name : t.name;
    const std::size_t children = is_op ? t.args.size() : 0;
    const std::size_t tid = static_cast<std::size_t>(token_id(is_op, name, children));
    {
      const auto& row = delta_[static_cast<std::size_t>(state)];
      if (tid < row.size() && row[tid] != -1) return row[tid];
    }

    ItemSet next;
    for (const Item& item : states_[static_cast<std::size_t>(state)]) {
      if (item.skip > 0) {
        next.push_back({item.pid, item.pos, item.skip - 1 + children});
        continue;
      }
      const auto& toks = tokens_[static_cast<std::size_t>(item.pid)];
      if (item.pos >= toks.size()) continue;  // already complete
      const Token& expected = toks[item.pos];
      switch (expected.kind) {
        case Token::Kind::Symbol:
          if (!is_op && name == expected.name) next.push_back({item.pid, item.pos + 1, 0});
          break;
        case Token::Kind::Operation:
          if (is_op && children == expected.children && name == expected.name)
            next.push_back({item.pid, item.pos + 1, 0});
          break;
        case Token::Kind::Any:
          next.push_back({item.pid, item.pos + 1, children});
          break;
      }
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    const int target = intern(std::move(next));
    auto& row = delta_[static_cast<std::size_t>(state)];  // intern may grow delta_
    if (row.size() <= tid) row.resize(tid + 1, -1);
    row[tid] = target;
    return target;
  }

  const SignatureRegistry* reg_;
  std::size_t state_budget_;
  std::vector<Pattern> patterns_;
  std::vector<std::vector<Token>> tokens_;

  // lazily built machine
  mutable std::vector<ItemSet> states_;
  mutable std::map<std::string, int> state_ids_;
  mutable std::map<std::string, int> sym_ids_;
  mutable std::map<std::string, std::map<std::size_t, int>> op_ids_;
  mutable int next_token_id_ = 0;
  mutable int start_ = -1;
  mutable std::vector<std::vector<int>> delta_;  // [state][token id] -> state, -1 unknown
};

}  // namespace termmatch
