#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "termmatch/matching.hpp"
#include "termmatch/term.hpp"

namespace termmatch {

struct NonTerminationError : TermError {
  TermPtr intermediate;
  explicit NonTerminationError(TermPtr t)
      : TermError("rewrite iteration limit exceeded"), intermediate(std::move(t)) {}
};

// A replacement result: a single term, or a sequence to splice into the
// surrounding argument list.
struct Replacement {
  bool is_sequence = false;
  TermList terms;

  static Replacement single(TermPtr t) { return Replacement{false, {std::move(t)}}; }
  static Replacement sequence(TermList ts) { return Replacement{true, std::move(ts)}; }
};

struct ReplacementRule {
  Pattern pattern;
  std::function<Replacement(const Substitution&)> replace;
};

// Builds a rule whose replacement is a template instantiated with the match
// substitution. A template whose root is a named sequence wildcard produces a
// spliced sequence.
inline ReplacementRule make_template_rule(Pattern pattern, TermPtr replacement_template) {
  return ReplacementRule{
      std::move(pattern), [tmpl = std::move(replacement_template)](const Substitution& sigma) {
        if (tmpl->kind == TermKind::Wildcard && tmpl->wkind != WildcardKind::Dot &&
            !tmpl->name.empty()) {
          const Binding* b = sigma.find(tmpl->name);
          if (!b) throw IncompleteSubstitutionError("unbound variable '" + tmpl->name + "'");
          return Replacement::sequence(b->terms);
        }
        TermList out;
        detail::substitute_into(tmpl, sigma, out);
        if (out.size() == 1) return Replacement::single(out[0]);
        return Replacement::sequence(std::move(out));
      }};
}

struct RewriteConfig {
  std::size_t max_iterations = 10000;
};

namespace detail {

// Leftmost-innermost, first-rule-wins. Returns the rewritten subtree as a
// splice list, or nullopt when nothing matched.
inline std::optional<TermList> rewrite_subterm(const TermPtr& t,
                                               const std::vector<ReplacementRule>& rules,
                                               const SignatureRegistry& reg, bool at_root) {
  if (t->kind == TermKind::Application) {
    for (std::size_t i = 0; i < t->args.size(); ++i) {
      if (auto spliced = rewrite_subterm(t->args[i], rules, reg, false)) {
        TermList args(t->args.begin(), t->args.begin() + static_cast<long>(i));
        args.insert(args.end(), spliced->begin(), spliced->end());
        args.insert(args.end(), t->args.begin() + static_cast<long>(i) + 1, t->args.end());
        return TermList{canonicalize(make_application(t->sig, std::move(args)))};
      }
    }
  }
  for (const auto& rule : rules) {
    if (auto sigma = match_first(t, rule.pattern, reg)) {
      Replacement r = rule.replace(*sigma);
      if (at_root && (r.is_sequence || r.terms.size() != 1))
        throw ShapeError("sequence replacement at term root");
      TermList out;
      out.reserve(r.terms.size());
      for (auto& u : r.terms) out.push_back(canonicalize(u));
      return out;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Applies the first matching (subterm, rule) pair under leftmost-innermost
// traversal; absent when no rule matches anywhere.
inline std::optional<TermPtr> replace_once(const TermPtr& t,
                                           const std::vector<ReplacementRule>& rules,
                                           const SignatureRegistry& reg) {
  if (!is_ground(t)) throw InvalidSubjectError("rewrite subject must be ground");
  auto result = detail::rewrite_subterm(canonicalize(t), rules, reg, true);
  if (!result) return std::nullopt;
  return (*result)[0];
}

// Iterates replace_once to a fixpoint; throws NonTerminationError (carrying
// the intermediate term) once max_iterations rewrites were applied.
inline TermPtr replace_all(const TermPtr& t, const std::vector<ReplacementRule>& rules,
                           const SignatureRegistry& reg, const RewriteConfig& cfg = {}) {
  TermPtr current = canonicalize(t);
  for (std::size_t i = 0; i < cfg.max_iterations; ++i) {
    auto next = replace_once(current, rules, reg);
    if (!next) return current;
    current = *next;
  }
  if (!replace_once(current, rules, reg)) return current;
  throw NonTerminationError(current);
}

}  // namespace termmatch
