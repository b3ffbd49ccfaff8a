#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "termmatch/bipartite.hpp"
#include "termmatch/diophantine.hpp"
#include "termmatch/matching.hpp"
#include "termmatch/term.hpp"

namespace termmatch {

struct SerializationError : TermError {
  using TermError::TermError;
};

// Parses a serialized constraint back into a predicate; required when loading
// a matcher whose patterns carry constraints.
using ConstraintParser = std::function<Constraint(const std::string&)>;

using ManyToOneSink = std::function<bool(int pattern_id, const Substitution&)>;

// Generalized non-deterministic discrimination net. Patterns are inserted as
// preorder token chains (with explicit compound-end transitions for variadic
// operations); common prefixes share states. Commutative applications are a
// single opaque transition that delegates to a nested commutative matcher,
// which reuses another ManyToOneMatcher for the subterms.
class ManyToOneMatcher {
 public:
  explicit ManyToOneMatcher(const SignatureRegistry& reg,
                            DiophantineCache& cache = default_diophantine_cache())
      : reg_(&reg), cache_(&cache) {
    states_.emplace_back();  // root
  }

  ManyToOneMatcher(ManyToOneMatcher&&) = default;
  ManyToOneMatcher& operator=(ManyToOneMatcher&&) = default;

  int add_pattern(Pattern p) {
    p.expression = canonicalize(p.expression);
    const int id = static_cast<int>(patterns_.size());
    std::vector<Token> tokens;
    emit_tokens(p.expression, nullptr, tokens);
    int cur = 0;
    for (const auto& tok : tokens) cur = insert_token(cur, tok);
    states_[static_cast<std::size_t>(cur)].finals.push_back(id);
    patterns_.push_back(std::move(p));
    return id;
  }

  // Traverses the subject in preorder, following every transition consistent
  // with the current subterm; reaching a final state yields its pattern ids
  // once their constraints hold. The result set equals the union of
  // one-to-one matches over the registered patterns.
  bool match(const TermPtr& subject, const ManyToOneSink& sink) const {
    if (!is_ground(subject)) throw InvalidSubjectError("subject must be ground");
    TermPtr s = canonicalize(subject);
    TermList root{s};
    Cursor cursor;
    cursor.levels.push_back({&root, 0});
    std::set<std::pair<int, std::string>> seen;
    return traverse(0, cursor, Substitution{}, [&](int pid, const Substitution& sigma) {
      if (!seen.insert({pid, substitution_key(sigma)}).second) return true;
      return sink(pid, sigma);
    });
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
  const SignatureRegistry& registry() const { return *reg_; }

  void save(std::ostream& os) const {
    os.write("TMNET1", 6);
    detail_write_u32(os, kVersion);
    save_body(os);
    if (!os) throw SerializationError("write failure");
  }

  static ManyToOneMatcher load(std::istream& is, SignatureRegistry& reg,
                               const ConstraintParser& constraint_parser = nullptr,
                               DiophantineCache& cache = default_diophantine_cache()) {
    char magic[6];
    is.read(magic, 6);
    if (!is || std::string(magic, 6) != "TMNET1")
      throw SerializationError("bad magic bytes");
    if (detail_read_u32(is) != kVersion) throw SerializationError("unsupported version");
    ManyToOneMatcher m(reg, cache);
    m.load_body(is, reg, constraint_parser);
    if (!is) throw SerializationError("truncated input");
    m.validate();
    return m;
  }

 private:
  static constexpr std::uint32_t kVersion = 1;

  struct Label {
    enum class Type : std::uint8_t {
      ExactSymbol,
      DotVar,
      AssocDotVar,
      SequenceVar,
      OpStart,
      OpEnd,
      Commutative
    };
    Type type = Type::ExactSymbol;
    std::string name;       // symbol name or variable name ("" = anonymous)
    std::string class_tag;  // dot variable restriction
    WildcardKind wkind = WildcardKind::Dot;
    const OperationSignature* sig = nullptr;

    std::string key() const {
      std::string k(1, static_cast<char>('A' + static_cast<int>(type)));
      k += name;
      k += '|';
      k += class_tag;
      k += static_cast<char>('0' + static_cast<int>(wkind));
      if (sig) k += sig->name;
      return k;
    }
  };

  struct Transition {
    Label label;
    int target = -1;  // unused for Commutative (case targets live in the hook)
    int hook = -1;    // Commutative only
  };

  struct State {
    std::vector<Transition> transitions;  // sorted by label key
    std::vector<int> finals;
  };

  struct CommutativeCase {
    std::string key;             // canonical key of the commutative subpattern
    TermList ground_args;        // one entry per occurrence
    std::vector<int> node_pattern;  // bipartite right node -> inner pattern id
    TermList node_term;             // right node -> subpattern (defines order)
    std::vector<SequenceVarSpec> seq_vars;
    bool satisfiable = true;  // false when occurrences of one name can never agree
    int target = -1;
  };

  struct CommutativeHook {
    const OperationSignature* sig = nullptr;
    std::unique_ptr<ManyToOneMatcher> inner;
    std::map<std::string, int> inner_ids;  // subpattern key -> inner pattern id
    std::vector<CommutativeCase> cases;
  };

  struct Token {
    Label label;
    TermPtr commutative_subpattern;  // set for Commutative tokens
  };

  struct Cursor {
    std::vector<std::pair<const TermList*, std::size_t>> levels;

    bool at_level_end() const { return levels.back().second == levels.back().first->size(); }
    const TermPtr& current() const { return (*levels.back().first)[levels.back().second]; }
    std::size_t remaining() const { return levels.back().first->size() - levels.back().second; }
  };

  void emit_tokens(const TermPtr& t, const OperationSignature* parent_assoc,
                   std::vector<Token>& out) const {
    switch (t->kind) {
      case TermKind::Symbol:
        out.push_back({Label{Label::Type::ExactSymbol, t->name, "", WildcardKind::Dot, nullptr}, nullptr});
        return;
      case TermKind::Wildcard:
        if (t->wkind == WildcardKind::Dot) {
          if (parent_assoc && t->class_tag.empty()) {
            out.push_back(
                {Label{Label::Type::AssocDotVar, t->name, "", WildcardKind::Dot, parent_assoc},
                 nullptr});
          } else {
            out.push_back(
                {Label{Label::Type::DotVar, t->name, t->class_tag, WildcardKind::Dot, nullptr},
                 nullptr});
          }
        } else {
          out.push_back(
              {Label{Label::Type::SequenceVar, t->name, "", t->wkind, nullptr}, nullptr});
        }
        return;
      case TermKind::Application:
        if (t->sig->commutative) {
          out.push_back({Label{Label::Type::Commutative, "", "", WildcardKind::Dot, t->sig}, t});
          return;
        }
        out.push_back({Label{Label::Type::OpStart, "", "", WildcardKind::Dot, t->sig}, nullptr});
        for (const auto& a : t->args)
          emit_tokens(a, t->sig->associative ? t->sig : nullptr, out);
        out.push_back({Label{Label::Type::OpEnd, "", "", WildcardKind::Dot, nullptr}, nullptr});
        return;
    }
  }

  int insert_token(int state, const Token& tok) {
    if (tok.label.type == Label::Type::Commutative)
      return insert_commutative(state, tok.commutative_subpattern);
    const std::string key = tok.label.key();
    {
      auto& trans = states_[static_cast<std::size_t>(state)].transitions;
      auto it = std::lower_bound(trans.begin(), trans.end(), key,
                                 [](const Transition& t, const std::string& k) {
                                   return t.label.key() < k;
                                 });
      if (it != trans.end() && it->label.key() == key) return it->target;
    }
    const int target = new_state();  // may reallocate states_
    auto& trans = states_[static_cast<std::size_t>(state)].transitions;
    auto it = std::lower_bound(trans.begin(), trans.end(), key,
                               [](const Transition& t, const std::string& k) {
                                 return t.label.key() < k;
                               });
    trans.insert(it, Transition{tok.label, target, -1});
    return target;
  }

  int new_state() {
    states_.emplace_back();
    return static_cast<int>(states_.size()) - 1;
  }

  int insert_commutative(int state, const TermPtr& subpattern) {
    Label label{Label::Type::Commutative, "", "", WildcardKind::Dot, subpattern->sig};
    const std::string key = label.key();
    auto& trans = states_[static_cast<std::size_t>(state)].transitions;
    auto it = std::lower_bound(trans.begin(), trans.end(), key,
                               [](const Transition& t, const std::string& k) {
                                 return t.label.key() < k;
                               });
    int hook_index;
    if (it != trans.end() && it->label.key() == key) {
      hook_index = it->hook;
    } else {
      hook_index = static_cast<int>(hooks_.size());
      auto hook = std::make_unique<CommutativeHook>();
      hook->sig = subpattern->sig;
      hook->inner = std::make_unique<ManyToOneMatcher>(*reg_, *cache_);
      hooks_.push_back(std::move(hook));
      states_[static_cast<std::size_t>(state)].transitions.insert(
          it, Transition{label, -1, hook_index});
    }
    CommutativeHook& hook = *hooks_[static_cast<std::size_t>(hook_index)];
    const std::string case_key = term_key(subpattern);
    for (const auto& c : hook.cases)
      if (c.key == case_key) return c.target;
    hook.cases.push_back(build_case(hook, subpattern, case_key));
    return hook.cases.back().target;
  }

  CommutativeCase build_case(CommutativeHook& hook, const TermPtr& subpattern,
                             const std::string& case_key) {
    CommutativeCase c;
    c.key = case_key;
    const OperationSignature* assoc = subpattern->sig->associative ? subpattern->sig : nullptr;
    std::map<std::string, std::size_t> seq_index;
    for (const auto& arg : subpattern->args) {
      if (is_ground(arg)) {
        c.ground_args.push_back(arg);
        continue;
      }
      if (arg->kind == TermKind::Wildcard) {
        const bool absorbing_dot =
            arg->wkind == WildcardKind::Dot && assoc != nullptr && arg->class_tag.empty();
        if (arg->wkind != WildcardKind::Dot || absorbing_dot) {
          SequenceVarSpec spec;
          spec.name = arg->name;
          spec.min_total = (arg->wkind == WildcardKind::Star && !absorbing_dot) ? 0 : 1;
          spec.wrap_sig = absorbing_dot ? assoc : nullptr;
          if (!arg->name.empty()) {
            auto [it, inserted] = seq_index.emplace(arg->name, c.seq_vars.size());
            if (!inserted) {
              SequenceVarSpec& prev = c.seq_vars[it->second];
              // a wrapped single-term binding and a sequence binding can never agree
              if (prev.wrap_sig != spec.wrap_sig) c.satisfiable = false;
              prev.min_total = std::max(prev.min_total, spec.min_total);
              ++prev.multiplicity;
              continue;
            }
          }
          c.seq_vars.push_back(spec);
          continue;
        }
      }
      // bipartite node: compound subpattern, class-restricted dot, plain dot
      c.node_term.push_back(arg);
    }
    std::stable_sort(c.node_term.begin(), c.node_term.end(), term_less);
    for (const auto& node : c.node_term) {
      const std::string k = term_key(node);
      auto it = hook.inner_ids.find(k);
      int pid;
      if (it == hook.inner_ids.end()) {
        pid = hook.inner->add_pattern(Pattern(node));
        hook.inner_ids.emplace(k, pid);
      } else {
        pid = it->second;
      }
      c.node_pattern.push_back(pid);
    }
    c.target = new_state();
    return c;
  }

  using Visit = std::function<bool(int, const Substitution&)>;

  bool traverse(int state, const Cursor& cursor, const Substitution& sigma,
                const Visit& visit) const {
    if (cursor.levels.size() == 1 && cursor.at_level_end()) {
      for (int pid : states_[static_cast<std::size_t>(state)].finals) {
        if (!pattern_constraints_ok(pid, sigma)) continue;
        if (!visit(pid, sigma)) return false;
      }
      return true;
    }
    for (const auto& tr : states_[static_cast<std::size_t>(state)].transitions)
      if (!follow(tr, cursor, sigma, visit)) return false;
    return true;
  }

  bool pattern_constraints_ok(int pid, const Substitution& sigma) const {
    for (const auto& c : patterns_[static_cast<std::size_t>(pid)].constraints) {
      for (const auto& v : c.required_variables)
        if (!sigma.contains(v)) return false;
      if (!c.predicate(sigma)) return false;
    }
    return true;
  }

  static Cursor advanced(const Cursor& cursor, std::size_t n) {
    Cursor next = cursor;
    next.levels.back().second += n;
    return next;
  }

  bool follow(const Transition& tr, const Cursor& cursor, const Substitution& sigma,
              const Visit& visit) const {
    const Label& label = tr.label;
    switch (label.type) {
      case Label::Type::ExactSymbol: {
        if (cursor.at_level_end()) return true;
        const TermPtr& t = cursor.current();
        if (t->kind != TermKind::Symbol || t->name != label.name) return true;
        return traverse(tr.target, advanced(cursor, 1), sigma, visit);
      }
      case Label::Type::DotVar: {
        if (cursor.at_level_end()) return true;
        const TermPtr& t = cursor.current();
        if (!label.class_tag.empty() &&
            (t->kind != TermKind::Symbol || !reg_->class_is_a(t->class_tag, label.class_tag)))
          return true;
        if (label.name.empty()) return traverse(tr.target, advanced(cursor, 1), sigma, visit);
        Substitution next = sigma;
        if (!next.bind(label.name, Binding::single(t))) return true;
        return traverse(tr.target, advanced(cursor, 1), next, visit);
      }
      case Label::Type::AssocDotVar:
        return follow_assoc_dot(tr, cursor, sigma, visit);
      case Label::Type::SequenceVar:
        return follow_sequence(tr, cursor, sigma, visit);
      case Label::Type::OpStart: {
        if (cursor.at_level_end()) return true;
        const TermPtr& t = cursor.current();
        if (t->kind != TermKind::Application || t->sig != label.sig) return true;
        Cursor next = cursor;
        next.levels.push_back({&t->args, 0});
        return traverse(tr.target, next, sigma, visit);
      }
      case Label::Type::OpEnd: {
        if (cursor.levels.size() <= 1 || !cursor.at_level_end()) return true;
        Cursor next = cursor;
        next.levels.pop_back();
        ++next.levels.back().second;
        return traverse(tr.target, next, sigma, visit);
      }
      case Label::Type::Commutative: {
        if (cursor.at_level_end()) return true;
        const TermPtr& t = cursor.current();
        if (t->kind != TermKind::Application || t->sig != label.sig) return true;
        const CommutativeHook& hook = *hooks_[static_cast<std::size_t>(tr.hook)];
        return match_hook(hook, t, sigma, [&](int target, const Substitution& s2) {
          return traverse(target, advanced(cursor, 1), s2, visit);
        });
      }
    }
    return true;
  }

  bool follow_assoc_dot(const Transition& tr, const Cursor& cursor, const Substitution& sigma,
                        const Visit& visit) const {
    const Label& label = tr.label;
    if (!label.name.empty()) {
      if (const Binding* b = sigma.find(label.name)) {
        TermList run;
        const TermPtr& v = b->terms[0];
        if (!b->is_sequence && v->kind == TermKind::Application && v->sig == label.sig)
          run = v->args;
        else
          run = b->terms;
        if (cursor.remaining() < run.size() || run.empty()) return true;
        for (std::size_t i = 0; i < run.size(); ++i)
          if (!term_equal((*cursor.levels.back().first)[cursor.levels.back().second + i], run[i]))
            return true;
        return traverse(tr.target, advanced(cursor, run.size()), sigma, visit);
      }
    }
    const std::size_t avail = cursor.remaining();
    for (std::size_t k = 1; k <= avail; ++k) {
      TermPtr value;
      if (k == 1) {
        value = cursor.current();
      } else {
        if (k < label.sig->arity) continue;
        const auto& [list, index] = cursor.levels.back();
        TermList items(list->begin() + static_cast<long>(index),
                       list->begin() + static_cast<long>(index + k));
        value = canonicalize(make_application(label.sig, std::move(items)));
      }
      if (label.name.empty()) {
        if (!traverse(tr.target, advanced(cursor, k), sigma, visit)) return false;
      } else {
        Substitution next = sigma;
        if (next.bind(label.name, Binding::single(value))) {
          if (!traverse(tr.target, advanced(cursor, k), next, visit)) return false;
        }
      }
    }
    return true;
  }

  bool follow_sequence(const Transition& tr, const Cursor& cursor, const Substitution& sigma,
                       const Visit& visit) const {
    const Label& label = tr.label;
    const auto& [list, index] = cursor.levels.back();
    if (!label.name.empty()) {
      if (const Binding* b = sigma.find(label.name)) {
        if (!b->is_sequence || cursor.remaining() < b->terms.size()) return true;
        for (std::size_t i = 0; i < b->terms.size(); ++i)
          if (!term_equal((*list)[index + i], b->terms[i])) return true;
        return traverse(tr.target, advanced(cursor, b->terms.size()), sigma, visit);
      }
    }
    const std::size_t min_k = label.wkind == WildcardKind::Plus ? 1 : 0;
    for (std::size_t k = min_k; k <= cursor.remaining(); ++k) {
      if (label.name.empty()) {
        if (!traverse(tr.target, advanced(cursor, k), sigma, visit)) return false;
      } else {
        TermList run(list->begin() + static_cast<long>(index),
                     list->begin() + static_cast<long>(index + k));
        Substitution next = sigma;
        if (next.bind(label.name, Binding::sequence(std::move(run)))) {
          if (!traverse(tr.target, advanced(cursor, k), next, visit)) return false;
        }
      }
    }
    return true;
  }

  // Matches the argument multiset of one commutative subject application:
  // the inner net labels a bipartite graph between subject arguments and
  // each case's subpattern nodes; maximum matchings passing the order filter
  // have their edge substitutions combined, and leftover arguments are
  // distributed onto the case's sequence variables.
  bool match_hook(const CommutativeHook& hook, const TermPtr& subject, const Substitution& prior,
                  const std::function<bool(int, const Substitution&)>& cont) const {
    TermMultiset args = to_multiset(subject->args);
    // one inner run per distinct argument, shared by all cases
    std::vector<std::vector<std::pair<int, Substitution>>> candidates(args.size());
    for (std::size_t i = 0; i < args.size(); ++i)
      candidates[i] = hook.inner->match_all(args[i].first);

    for (const auto& c : hook.cases) {
      if (!c.satisfiable) continue;
      TermMultiset remaining = args;
      bool ok = true;
      for (const auto& g : c.ground_args)
        if (!detail::multiset_subtract(remaining, g, 1)) {
          ok = false;
          break;
        }
      if (!ok) continue;

      // left nodes: remaining argument occurrences in canonical order
      std::vector<std::size_t> left_distinct;  // left node -> index into args
      MatchGraph graph;
      {
        std::size_t left_count = 0;
        for (const auto& [t, n] : remaining) left_count += static_cast<std::size_t>(n);
        graph.resize(left_count, c.node_pattern.size());
        std::size_t l = 0;
        for (std::size_t d = 0; d < remaining.size(); ++d) {
          auto dist = std::lower_bound(args.begin(), args.end(), remaining[d].first,
                                       [](const auto& e, const TermPtr& u) {
                                         return term_less(e.first, u);
                                       }) - args.begin();
          for (int n = 0; n < remaining[d].second; ++n) {
            left_distinct.push_back(static_cast<std::size_t>(dist));
            graph.left_group[l] = static_cast<int>(dist);
            ++l;
          }
        }
      }
      for (std::size_t l = 0; l < graph.left_count; ++l) {
        const auto& cand = candidates[left_distinct[l]];
        for (std::size_t r = 0; r < c.node_pattern.size(); ++r) {
          std::vector<Substitution> subs;
          for (const auto& [pid, sub] : cand)
            if (pid == c.node_pattern[r]) subs.push_back(sub);
          if (!subs.empty()) graph.add_edge(static_cast<int>(l), static_cast<int>(r), std::move(subs));
        }
      }
      if (hopcroft_karp(graph).size() < c.node_pattern.size()) continue;

      bool keep_going = enumerate_maximum_matchings(graph, [&](const Matching& m) {
        if (m.size() < c.node_pattern.size()) return true;
        if (!is_order_preserving(m, graph)) return true;
        return combine_edge_substitutions(m, graph, prior, [&](const Substitution& combined) {
          TermMultiset leftovers;
          {
            std::vector<char> matched(graph.left_count, 0);
            for (const auto& [l, r] : m.pairs) matched[static_cast<std::size_t>(l)] = 1;
            for (std::size_t l = 0; l < graph.left_count; ++l) {
              if (matched[l]) continue;
              const TermPtr& t = args[left_distinct[l]].first;
              if (!leftovers.empty() && term_equal(leftovers.back().first, t))
                ++leftovers.back().second;
              else
                leftovers.emplace_back(t, 1);
            }
          }
          return distribute(leftovers, c.seq_vars, combined,
                            [&](const Substitution& final_sub) {
                              return cont(c.target, final_sub);
                            },
                            *cache_);
        });
      });
      if (!keep_going) return false;
    }
    return true;
  }

  void validate() const {
    for (const auto& st : states_) {
      for (const auto& tr : st.transitions) {
        if (tr.label.type == Label::Type::Commutative) {
          if (tr.hook < 0 || tr.hook >= static_cast<int>(hooks_.size()))
            throw SerializationError("hook index out of range");
        } else if (tr.target < 0 || tr.target >= static_cast<int>(states_.size())) {
          throw SerializationError("state index out of range");
        }
      }
      for (int pid : st.finals)
        if (pid < 0 || pid >= static_cast<int>(patterns_.size()))
          throw SerializationError("pattern id out of range");
    }
    for (const auto& hook : hooks_)
      for (const auto& c : hook->cases)
        if (c.target < 0 || c.target >= static_cast<int>(states_.size()))
          throw SerializationError("case target out of range");
  }

  // ---- serialization ----

  static void detail_write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                            static_cast<unsigned char>(v >> 16),
                            static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(buf), 4);
  }

  static std::uint32_t detail_read_u32(std::istream& is) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
           (static_cast<std::uint32_t>(buf[2]) << 16) | (static_cast<std::uint32_t>(buf[3]) << 24);
  }

  static void write_string(std::ostream& os, const std::string& s) {
    detail_write_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<long>(s.size()));
  }

  static std::string read_string(std::istream& is) {
    std::uint32_t n = detail_read_u32(is);
    if (n > (1u << 24)) throw SerializationError("string too long");
    std::string s(n, '\0');
    is.read(s.data(), static_cast<long>(n));
    return s;
  }

  static void write_term(std::ostream& os, const TermPtr& t) {
    os.put(static_cast<char>(t->kind));
    switch (t->kind) {
      case TermKind::Symbol:
        write_string(os, t->name);
        write_string(os, t->class_tag);
        detail_write_u32(os, static_cast<std::uint32_t>(t->properties.size()));
        for (const auto& p : t->properties) write_string(os, p);
        break;
      case TermKind::Wildcard:
        os.put(static_cast<char>(t->wkind));
        write_string(os, t->name);
        write_string(os, t->class_tag);
        break;
      case TermKind::Application:
        write_string(os, t->sig->name);
        detail_write_u32(os, static_cast<std::uint32_t>(t->args.size()));
        for (const auto& a : t->args) write_term(os, a);
        break;
    }
  }

  static TermPtr read_term(std::istream& is, SignatureRegistry& reg) {
    int kind = is.get();
    switch (static_cast<TermKind>(kind)) {
      case TermKind::Symbol: {
        std::string name = read_string(is);
        std::string cls = read_string(is);
        std::uint32_t n = detail_read_u32(is);
        std::vector<std::string> props;
        for (std::uint32_t i = 0; i < n; ++i) props.push_back(read_string(is));
        return make_symbol(std::move(name), std::move(cls), std::move(props));
      }
      case TermKind::Wildcard: {
        auto wkind = static_cast<WildcardKind>(is.get());
        std::string name = read_string(is);
        std::string cls = read_string(is);
        return make_wildcard(wkind, std::move(name), std::move(cls));
      }
      case TermKind::Application: {
        std::string signame = read_string(is);
        const OperationSignature* sig = reg.find_operation(signame);
        if (!sig) throw SerializationError("unknown operation '" + signame + "'");
        std::uint32_t n = detail_read_u32(is);
        TermList args;
        for (std::uint32_t i = 0; i < n; ++i) args.push_back(read_term(is, reg));
        return make_application(sig, std::move(args));
      }
      default:
        throw SerializationError("corrupt term encoding");
    }
  }

  void save_body(std::ostream& os) const {
    detail_write_u32(os, static_cast<std::uint32_t>(patterns_.size()));
    for (const auto& p : patterns_) {
      write_term(os, p.expression);
      detail_write_u32(os, static_cast<std::uint32_t>(p.constraints.size()));
      for (const auto& c : p.constraints) {
        if (c.source.empty())
          throw SerializationError("constraint without textual form cannot be serialized");
        write_string(os, c.source);
      }
    }
    detail_write_u32(os, static_cast<std::uint32_t>(states_.size()));
    for (const auto& st : states_) {
      detail_write_u32(os, static_cast<std::uint32_t>(st.finals.size()));
      for (int pid : st.finals) detail_write_u32(os, static_cast<std::uint32_t>(pid));
      detail_write_u32(os, static_cast<std::uint32_t>(st.transitions.size()));
      for (const auto& tr : st.transitions) {
        os.put(static_cast<char>(tr.label.type));
        write_string(os, tr.label.name);
        write_string(os, tr.label.class_tag);
        os.put(static_cast<char>(tr.label.wkind));
        write_string(os, tr.label.sig ? tr.label.sig->name : "");
        detail_write_u32(os, static_cast<std::uint32_t>(tr.target));
        detail_write_u32(os, static_cast<std::uint32_t>(tr.hook));
      }
    }
    detail_write_u32(os, static_cast<std::uint32_t>(hooks_.size()));
    for (const auto& hook : hooks_) {
      write_string(os, hook->sig->name);
      hook->inner->save_body(os);
      detail_write_u32(os, static_cast<std::uint32_t>(hook->inner_ids.size()));
      for (const auto& [k, v] : hook->inner_ids) {
        write_string(os, k);
        detail_write_u32(os, static_cast<std::uint32_t>(v));
      }
      detail_write_u32(os, static_cast<std::uint32_t>(hook->cases.size()));
      for (const auto& c : hook->cases) {
        write_string(os, c.key);
        detail_write_u32(os, static_cast<std::uint32_t>(c.ground_args.size()));
        for (const auto& t : c.ground_args) write_term(os, t);
        detail_write_u32(os, static_cast<std::uint32_t>(c.node_pattern.size()));
        for (std::size_t i = 0; i < c.node_pattern.size(); ++i) {
          detail_write_u32(os, static_cast<std::uint32_t>(c.node_pattern[i]));
          write_term(os, c.node_term[i]);
        }
        detail_write_u32(os, static_cast<std::uint32_t>(c.seq_vars.size()));
        for (const auto& sv : c.seq_vars) {
          write_string(os, sv.name);
          os.put(static_cast<char>(sv.min_total));
          detail_write_u32(os, static_cast<std::uint32_t>(sv.multiplicity));
          write_string(os, sv.wrap_sig ? sv.wrap_sig->name : "");
        }
        os.put(c.satisfiable ? 1 : 0);
        detail_write_u32(os, static_cast<std::uint32_t>(c.target));
      }
    }
  }

  void load_body(std::istream& is, SignatureRegistry& reg, const ConstraintParser& parser) {
    const std::uint32_t pattern_count = detail_read_u32(is);
    for (std::uint32_t i = 0; i < pattern_count; ++i) {
      Pattern p(read_term(is, reg));
      const std::uint32_t ccount = detail_read_u32(is);
      for (std::uint32_t j = 0; j < ccount; ++j) {
        std::string source = read_string(is);
        if (!parser)
          throw SerializationError("matcher has constraints but no constraint parser given");
        p.constraints.push_back(parser(source));
      }
      patterns_.push_back(std::move(p));
    }
    const std::uint32_t state_count = detail_read_u32(is);
    states_.clear();
    for (std::uint32_t i = 0; i < state_count; ++i) {
      State st;
      const std::uint32_t fcount = detail_read_u32(is);
      for (std::uint32_t j = 0; j < fcount; ++j)
        st.finals.push_back(static_cast<int>(detail_read_u32(is)));
      const std::uint32_t tcount = detail_read_u32(is);
      for (std::uint32_t j = 0; j < tcount; ++j) {
        Transition tr;
        tr.label.type = static_cast<Label::Type>(is.get());
        tr.label.name = read_string(is);
        tr.label.class_tag = read_string(is);
        tr.label.wkind = static_cast<WildcardKind>(is.get());
        std::string signame = read_string(is);
        if (!signame.empty()) {
          tr.label.sig = reg.find_operation(signame);
          if (!tr.label.sig) throw SerializationError("unknown operation '" + signame + "'");
        }
        tr.target = static_cast<int>(detail_read_u32(is));
        tr.hook = static_cast<int>(detail_read_u32(is));
        st.transitions.push_back(std::move(tr));
      }
      states_.push_back(std::move(st));
    }
    const std::uint32_t hook_count = detail_read_u32(is);
    for (std::uint32_t i = 0; i < hook_count; ++i) {
      auto hook = std::make_unique<CommutativeHook>();
      std::string signame = read_string(is);
      hook->sig = reg.find_operation(signame);
      if (!hook->sig) throw SerializationError("unknown operation '" + signame + "'");
      hook->inner = std::make_unique<ManyToOneMatcher>(reg, *cache_);
      hook->inner->load_body(is, reg, parser);
      const std::uint32_t icount = detail_read_u32(is);
      for (std::uint32_t j = 0; j < icount; ++j) {
        std::string k = read_string(is);
        hook->inner_ids[k] = static_cast<int>(detail_read_u32(is));
      }
      const std::uint32_t ccount = detail_read_u32(is);
      for (std::uint32_t j = 0; j < ccount; ++j) {
        CommutativeCase c;
        c.key = read_string(is);
        const std::uint32_t gcount = detail_read_u32(is);
        for (std::uint32_t k = 0; k < gcount; ++k) c.ground_args.push_back(read_term(is, reg));
        const std::uint32_t ncount = detail_read_u32(is);
        for (std::uint32_t k = 0; k < ncount; ++k) {
          c.node_pattern.push_back(static_cast<int>(detail_read_u32(is)));
          c.node_term.push_back(read_term(is, reg));
        }
        const std::uint32_t scount = detail_read_u32(is);
        for (std::uint32_t k = 0; k < scount; ++k) {
          SequenceVarSpec sv;
          sv.name = read_string(is);
          sv.min_total = is.get();
          sv.multiplicity = static_cast<int>(detail_read_u32(is));
          std::string wrap = read_string(is);
          if (!wrap.empty()) {
            sv.wrap_sig = reg.find_operation(wrap);
            if (!sv.wrap_sig) throw SerializationError("unknown operation '" + wrap + "'");
          }
          c.seq_vars.push_back(std::move(sv));
        }
        c.satisfiable = is.get() != 0;
        c.target = static_cast<int>(detail_read_u32(is));
        hook->cases.push_back(std::move(c));
      }
      hooks_.push_back(std::move(hook));
    }
  }

  const SignatureRegistry* reg_;
  DiophantineCache* cache_;
  std::vector<State> states_;
  std::vector<std::unique_ptr<CommutativeHook>> hooks_;
  std::vector<Pattern> patterns_;
};

}  // namespace termmatch
