#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "termmatch/diophantine.hpp"
#include "termmatch/term.hpp"

namespace termmatch {

// Sinks return false to stop enumeration early.
using MatchSink = std::function<bool(const Substitution&)>;

namespace detail {

inline bool multiset_contains(const TermMultiset& ms, const TermPtr& t, int count) {
  auto it = std::lower_bound(ms.begin(), ms.end(), t,
                             [](const auto& e, const TermPtr& u) { return term_less(e.first, u); });
  return it != ms.end() && term_equal(it->first, t) && it->second >= count;
}

inline bool multiset_subtract(TermMultiset& ms, const TermPtr& t, int count) {
  auto it = std::lower_bound(ms.begin(), ms.end(), t,
                             [](const auto& e, const TermPtr& u) { return term_less(e.first, u); });
  if (it == ms.end() || !term_equal(it->first, t) || it->second < count) return false;
  it->second -= count;
  if (it->second == 0) ms.erase(it);
  return true;
}

inline std::size_t multiset_total(const TermMultiset& ms) {
  std::size_t n = 0;
  for (const auto& [t, c] : ms) n += static_cast<std::size_t>(c);
  return n;
}

// One-to-one matching engine: backtracking over argument partitions, the
// six-step commutative order, and Diophantine distribution for sequence
// variables in commutative functions.
class MatchEngine {
 public:
  using Cont = std::function<bool(const Substitution&)>;

  MatchEngine(const SignatureRegistry& reg, const std::vector<Constraint>& constraints,
              DiophantineCache& cache)
      : reg_(reg), constraints_(constraints), cache_(cache) {}

  // Evaluates every constraint whose required variables are all bound.
  bool constraints_ok(const Substitution& sigma) const {
    for (const auto& c : constraints_) {
      bool ready = true;
      for (const auto& v : c.required_variables)
        if (!sigma.contains(v)) {
          ready = false;
          break;
        }
      if (ready && !c.predicate(sigma)) return false;
    }
    return true;
  }

  bool fully_satisfied(const Substitution& sigma) const {
    for (const auto& c : constraints_) {
      for (const auto& v : c.required_variables)
        if (!sigma.contains(v)) return false;
      if (!c.predicate(sigma)) return false;
    }
    return true;
  }

  bool try_bind(const Substitution& sigma, const std::string& name, Binding b, Substitution& out) const {
    out = sigma;
    if (!out.bind(name, std::move(b))) return false;
    return constraints_ok(out);
  }

  bool class_ok(const TermPtr& subject, const std::string& restriction) const {
    return subject->kind == TermKind::Symbol && reg_.class_is_a(subject->class_tag, restriction);
  }

  bool match_one(const TermPtr& s, const TermPtr& p, const Substitution& sigma, const Cont& cont) {
    switch (p->kind) {
      case TermKind::Symbol:
        return term_equal(s, p) ? cont(sigma) : true;
      case TermKind::Wildcard: {
        if (!p->class_tag.empty() && !class_ok(s, p->class_tag)) return true;
        if (p->name.empty()) return cont(sigma);
        Binding b = p->wkind == WildcardKind::Dot ? Binding::single(s) : Binding::sequence({s});
        Substitution next;
        if (!try_bind(sigma, p->name, std::move(b), next)) return true;
        return cont(next);
      }
      case TermKind::Application: {
        if (s->kind != TermKind::Application || s->sig != p->sig) return true;
        const OperationSignature* assoc = p->sig->associative ? p->sig : nullptr;
        if (p->sig->commutative) return match_commutative(s->args, p->args, assoc, sigma, cont);
        return match_sequence(s->args, 0, p->args, 0, assoc, sigma, cont);
      }
    }
    return true;
  }

  // Enumerates partitions of subjects into consecutive blocks assigned
  // left-to-right: dot takes one item (k >= 1 wrapped when associative),
  // star >= 0, plus >= 1, subpatterns recurse.
  bool match_sequence(const TermList& subs, std::size_t si, const TermList& pats, std::size_t pi,
                      const OperationSignature* assoc, const Substitution& sigma, const Cont& cont) {
    if (pi == pats.size()) return si == subs.size() ? cont(sigma) : true;
    const TermPtr& p = pats[pi];
    if (p->kind != TermKind::Wildcard) {
      if (si == subs.size()) return true;
      return match_one(subs[si], p, sigma, [&](const Substitution& next) {
        return match_sequence(subs, si + 1, pats, pi + 1, assoc, next, cont);
      });
    }
    // repeated variable: consume exactly the bound value
    if (!p->name.empty()) {
      if (const Binding* b = sigma.find(p->name)) {
        TermList run;
        if (!b->is_sequence && assoc && b->terms[0]->kind == TermKind::Application &&
            b->terms[0]->sig == assoc) {
          run = b->terms[0]->args;
        } else {
          run = b->terms;
        }
        if (si + run.size() > subs.size()) return true;
        for (std::size_t i = 0; i < run.size(); ++i)
          if (!term_equal(subs[si + i], run[i])) return true;
        return match_sequence(subs, si + run.size(), pats, pi + 1, assoc, sigma, cont);
      }
    }
    std::size_t rest_min = 0;
    for (std::size_t i = pi + 1; i < pats.size(); ++i)
      rest_min += (pats[i]->kind == TermKind::Wildcard && pats[i]->wkind == WildcardKind::Star) ? 0 : 1;
    if (subs.size() < si + rest_min) return true;
    const std::size_t avail = subs.size() - si - rest_min;

    if (p->wkind == WildcardKind::Dot) {
      const bool absorbing = assoc != nullptr && p->class_tag.empty();
      const std::size_t max_k = absorbing ? avail : std::min<std::size_t>(avail, 1);
      for (std::size_t k = 1; k <= max_k; ++k) {
        TermPtr value;
        if (k == 1) {
          value = subs[si];
          if (!p->class_tag.empty() && !class_ok(value, p->class_tag)) break;
        } else {
          if (k < assoc->arity) continue;
          TermList items(subs.begin() + static_cast<long>(si),
                         subs.begin() + static_cast<long>(si + k));
          value = canonicalize(make_application(assoc, std::move(items)));
        }
        if (p->name.empty()) {
          if (!match_sequence(subs, si + k, pats, pi + 1, assoc, sigma, cont)) return false;
        } else {
          Substitution next;
          if (try_bind(sigma, p->name, Binding::single(value), next)) {
            if (!match_sequence(subs, si + k, pats, pi + 1, assoc, next, cont)) return false;
          }
        }
      }
      return true;
    }
    // star / plus
    const std::size_t min_k = p->wkind == WildcardKind::Plus ? 1 : 0;
    for (std::size_t k = min_k; k <= avail; ++k) {
      if (p->name.empty()) {
        if (!match_sequence(subs, si + k, pats, pi + 1, assoc, sigma, cont)) return false;
      } else {
        TermList run(subs.begin() + static_cast<long>(si),
                     subs.begin() + static_cast<long>(si + k));
        Substitution next;
        if (try_bind(sigma, p->name, Binding::sequence(std::move(run)), next)) {
          if (!match_sequence(subs, si + k, pats, pi + 1, assoc, next, cont)) return false;
        }
      }
    }
    return true;
  }

  // Six-step commutative matching: constants, bound variables, non-variable
  // subpatterns, bound variables again, regular variables, sequence variables.
  // assoc is non-null when the commutative operation is also associative.
  bool match_commutative(const TermList& subject_args, const TermList& pattern_args,
                         const OperationSignature* assoc, const Substitution& sigma,
                         const Cont& cont) {
    TermMultiset remaining = to_multiset(subject_args);
    std::vector<TermPtr> compounds;
    std::vector<WildcardOcc> wildcards;
    for (const auto& p : pattern_args) {
      if (is_ground(p)) {
        if (!multiset_subtract(remaining, p, 1)) return true;  // step 1
      } else if (p->kind == TermKind::Wildcard) {
        add_wildcard_occ(wildcards, p);
      } else {
        compounds.push_back(p);
      }
    }
    // step 2: already-bound variables
    std::vector<WildcardOcc> unbound;
    for (const auto& occ : wildcards) {
      const Binding* b = occ.name.empty() ? nullptr : sigma.find(occ.name);
      if (b) {
        if (!subtract_bound(remaining, occ, *b, assoc)) return true;
      } else {
        unbound.push_back(occ);
      }
    }
    // step 3: non-variable subpatterns, backtracking over distinct subjects
    return match_compounds(remaining, compounds, 0, unbound, sigma, cont, assoc);
  }

 private:
  struct WildcardOcc {
    std::string name;  // "" = anonymous
    WildcardKind kind = WildcardKind::Dot;
    std::string class_tag;
    int count = 1;
  };

  static void add_wildcard_occ(std::vector<WildcardOcc>& occs, const TermPtr& w) {
    if (!w->name.empty()) {
      for (auto& o : occs) {
        if (o.name == w->name && o.kind == w->wkind && o.class_tag == w->class_tag) {
          ++o.count;
          return;
        }
      }
    }
    occs.push_back(WildcardOcc{w->name, w->wkind, w->class_tag, 1});
  }

  // Subtracts the bound value of a wildcard occurrence from the multiset.
  bool subtract_bound(TermMultiset& ms, const WildcardOcc& occ, const Binding& b,
                      const OperationSignature* assoc) const {
    if (!b.is_sequence) {
      const TermPtr& v = b.terms[0];
      if (assoc && v->kind == TermKind::Application && v->sig == assoc) {
        for (const auto& a : v->args)
          if (!multiset_subtract(ms, a, occ.count)) return false;
      } else {
        if (!multiset_subtract(ms, v, occ.count)) return false;
      }
      return true;
    }
    for (const auto& t : b.terms)
      if (!multiset_subtract(ms, t, occ.count)) return false;
    return true;
  }

  bool match_compounds(const TermMultiset& remaining, const std::vector<TermPtr>& compounds,
                       std::size_t ci, const std::vector<WildcardOcc>& wildcards,
                       const Substitution& sigma, const Cont& cont,
                       const OperationSignature* assoc) {
    if (ci == compounds.size())
      return commutative_variables(remaining, wildcards, sigma, cont, assoc);
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      TermMultiset next = remaining;
      TermPtr subject = next[i].first;
      if (--next[i].second == 0) next.erase(next.begin() + static_cast<long>(i));
      bool go = match_one(subject, compounds[ci], sigma, [&](const Substitution& s2) {
        return match_compounds(next, compounds, ci + 1, wildcards, s2, cont, assoc);
      });
      if (!go) return false;
    }
    return true;
  }

  // steps 4-6: re-subtract variables bound by step 3, assign remaining dot
  // variables, then distribute leftovers onto sequence variables.
  bool commutative_variables(TermMultiset remaining, const std::vector<WildcardOcc>& wildcards,
                             const Substitution& sigma, const Cont& cont,
                             const OperationSignature* assoc) {
    std::vector<WildcardOcc> dots;
    std::vector<SequenceVarSpec> seq_vars;
    for (const auto& occ : wildcards) {
      const Binding* b = occ.name.empty() ? nullptr : sigma.find(occ.name);
      if (b) {  // step 4
        if (!subtract_bound(remaining, occ, *b, assoc)) return true;
        continue;
      }
      if (occ.kind == WildcardKind::Dot) {
        const bool absorbing = assoc != nullptr && occ.class_tag.empty();
        if (absorbing) {
          seq_vars.push_back(SequenceVarSpec{occ.name, 1, occ.count, assoc});
        } else {
          dots.push_back(occ);
        }
      } else {
        seq_vars.push_back(
            SequenceVarSpec{occ.name, occ.kind == WildcardKind::Plus ? 1 : 0, occ.count, nullptr});
      }
    }
    return assign_dots(remaining, dots, 0, seq_vars, sigma, cont);
  }

  // step 5: distinct multiset assignments for remaining dot variables.
  bool assign_dots(const TermMultiset& remaining, const std::vector<WildcardOcc>& dots,
                   std::size_t di, const std::vector<SequenceVarSpec>& seq_vars,
                   const Substitution& sigma, const Cont& cont) {
    if (di == dots.size()) {
      return distribute(remaining, seq_vars, sigma,
                        [&](const Substitution& s2) {
                          return fully_ok_partial(s2) ? cont(s2) : true;
                        },
                        cache_);
    }
    const WildcardOcc& var = dots[di];
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      const auto& [term, count] = remaining[i];
      if (count < var.count) continue;
      if (!var.class_tag.empty() && !class_ok(term, var.class_tag)) continue;
      TermMultiset next = remaining;
      next[i].second -= var.count;
      if (next[i].second == 0) next.erase(next.begin() + static_cast<long>(i));
      if (var.name.empty()) {
        if (!assign_dots(next, dots, di + 1, seq_vars, sigma, cont)) return false;
      } else {
        Substitution s2;
        if (try_bind(sigma, var.name, Binding::single(term), s2)) {
          if (!assign_dots(next, dots, di + 1, seq_vars, s2, cont)) return false;
        }
      }
    }
    return true;
  }

  // distribute() binds without evaluating constraints; check them here.
  bool fully_ok_partial(const Substitution& sigma) const { return constraints_ok(sigma); }

  const SignatureRegistry& reg_;
  const std::vector<Constraint>& constraints_;
  DiophantineCache& cache_;
};

}  // namespace detail

// Lazily enumerates every distinct match substitution of pattern against the
// ground, canonical subject; constraints are evaluated as soon as all their
// variables are bound. Returns false iff the sink stopped the enumeration.
inline bool match(const TermPtr& subject, const Pattern& pattern, const SignatureRegistry& reg,
                  const MatchSink& sink,
                  DiophantineCache& cache = default_diophantine_cache()) {
  if (!is_ground(subject)) throw InvalidSubjectError("subject must be ground");
  TermPtr s = canonicalize(subject);
  TermPtr p = canonicalize(pattern.expression);
  detail::MatchEngine engine(reg, pattern.constraints, cache);
  std::set<std::string> seen;
  return engine.match_one(s, p, Substitution{}, [&](const Substitution& sigma) {
    if (!engine.fully_satisfied(sigma)) return true;
    if (!seen.insert(substitution_key(sigma)).second) return true;
    return sink(sigma);
  });
}

inline std::vector<Substitution> match_all(const TermPtr& subject, const Pattern& pattern,
                                           const SignatureRegistry& reg,
                                           DiophantineCache& cache = default_diophantine_cache()) {
  std::vector<Substitution> out;
  match(subject, pattern, reg, [&](const Substitution& s) {
    out.push_back(s);
    return true;
  }, cache);
  return out;
}

inline std::optional<Substitution> match_first(
    const TermPtr& subject, const Pattern& pattern, const SignatureRegistry& reg,
    DiophantineCache& cache = default_diophantine_cache()) {
  std::optional<Substitution> out;
  match(subject, pattern, reg, [&](const Substitution& s) {
    out = s;
    return false;
  }, cache);
  return out;
}

// Matches an argument list against a non-commutative pattern list; assoc
// non-null lets dot variables absorb argument runs of that signature.
inline bool match_sequence(const TermList& subjects, const TermList& patterns,
                           const OperationSignature* assoc, const SignatureRegistry& reg,
                           const std::vector<Constraint>& constraints, const Substitution& prior,
                           const MatchSink& sink,
                           DiophantineCache& cache = default_diophantine_cache()) {
  detail::MatchEngine engine(reg, constraints, cache);
  std::set<std::string> seen;
  return engine.match_sequence(subjects, 0, patterns, 0, assoc, prior,
                               [&](const Substitution& sigma) {
                                 if (!seen.insert(substitution_key(sigma)).second) return true;
                                 return sink(sigma);
                               });
}

// Matches the argument multisets of one commutative application using the
// six-step order. assoc non-null when the operation is also associative.
inline bool match_commutative(const TermList& subjects, const TermList& patterns,
                              const OperationSignature* assoc, const SignatureRegistry& reg,
                              const std::vector<Constraint>& constraints, const Substitution& prior,
                              const MatchSink& sink,
                              DiophantineCache& cache = default_diophantine_cache()) {
  detail::MatchEngine engine(reg, constraints, cache);
  std::set<std::string> seen;
  return engine.match_commutative(subjects, patterns, assoc, prior, [&](const Substitution& sigma) {
    if (!seen.insert(substitution_key(sigma)).second) return true;
    return sink(sigma);
  });
}

}  // namespace termmatch
