#pragma once

// Shared fixtures and deliberately naive reference implementations used to
// cross-check the real algorithms.

#include <algorithm>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "termmatch/matching.hpp"
#include "termmatch/syntax.hpp"
#include "termmatch/term.hpp"

namespace testutil {

using namespace termmatch;

// f: commutative; g: associative; h: associative+commutative; u: unary;
// p: plain variadic. Symbols a..d, with a,b in class T.
inline SignatureRegistry make_mixed_registry() {
  SignatureRegistry reg;
  reg.add_operation({"f", 2, true, false, true});
  reg.add_operation({"g", 2, true, true, false});
  reg.add_operation({"h", 2, true, true, true});
  reg.add_operation({"u", 1, false, false, false});
  reg.add_operation({"p", 0, true, false, false});
  reg.add_class("T");
  reg.declare_symbol("a", {"T", {}});
  reg.declare_symbol("b", {"T", {}});
  return reg;
}

inline std::set<std::string> keys_of(const std::vector<Substitution>& subs) {
  std::set<std::string> out;
  for (const auto& s : subs) out.insert(substitution_key(s));
  return out;
}

// ---- naive matcher: permutations for commutativity, no sharing, no nets ----

inline bool naive_match_term(const TermPtr& s, const TermPtr& p, const SignatureRegistry& reg,
                             Substitution sigma, std::vector<Substitution>& out);

// comm: the argument list belongs to a commutative application, so sequence
// runs are bound as sorted multisets (matching the canonical rendering).
inline bool naive_match_seq(const TermList& subs, std::size_t si, const TermList& pats,
                            std::size_t pi, const OperationSignature* assoc, bool comm,
                            const SignatureRegistry& reg, Substitution sigma,
                            std::vector<Substitution>& out) {
  if (pi == pats.size()) {
    if (si != subs.size()) return false;
    out.push_back(sigma);
    return true;
  }
  const TermPtr& p = pats[pi];
  const std::size_t avail = subs.size() - si;
  bool any = false;
  if (p->kind == TermKind::Wildcard && p->wkind != WildcardKind::Dot) {
    std::size_t min_k = p->wkind == WildcardKind::Plus ? 1 : 0;
    for (std::size_t k = min_k; k <= avail; ++k) {
      Substitution next = sigma;
      bool ok = true;
      if (!p->name.empty()) {
        TermList run(subs.begin() + static_cast<long>(si),
                     subs.begin() + static_cast<long>(si + k));
        if (comm) std::sort(run.begin(), run.end(), term_less);
        ok = next.bind(p->name, Binding::sequence(std::move(run)));
      }
      if (ok) any |= naive_match_seq(subs, si + k, pats, pi + 1, assoc, comm, reg, next, out);
    }
    return any;
  }
  if (p->kind == TermKind::Wildcard && assoc && p->class_tag.empty()) {
    // dot under an associative operation absorbs a run of length >= 1
    for (std::size_t k = 1; k <= avail; ++k) {
      TermPtr value;
      if (k == 1) {
        value = subs[si];
      } else {
        if (k < assoc->arity) continue;
        TermList run(subs.begin() + static_cast<long>(si),
                     subs.begin() + static_cast<long>(si + k));
        value = canonicalize(make_application(assoc, std::move(run)));
      }
      Substitution next = sigma;
      bool ok = true;
      if (!p->name.empty()) ok = next.bind(p->name, Binding::single(value));
      if (ok) any |= naive_match_seq(subs, si + k, pats, pi + 1, assoc, comm, reg, next, out);
    }
    return any;
  }
  if (avail == 0) return false;
  std::vector<Substitution> sub_out;
  naive_match_term(subs[si], p, reg, sigma, sub_out);
  for (const auto& next : sub_out)
    any |= naive_match_seq(subs, si + 1, pats, pi + 1, assoc, comm, reg, next, out);
  return any;
}

inline bool naive_match_term(const TermPtr& s, const TermPtr& p, const SignatureRegistry& reg,
                             Substitution sigma, std::vector<Substitution>& out) {
  switch (p->kind) {
    case TermKind::Symbol:
      if (!term_equal(s, p)) return false;
      out.push_back(std::move(sigma));
      return true;
    case TermKind::Wildcard: {
      if (!p->class_tag.empty() &&
          (s->kind != TermKind::Symbol || !reg.class_is_a(s->class_tag, p->class_tag)))
        return false;
      if (!p->name.empty()) {
        Binding b = p->wkind == WildcardKind::Dot ? Binding::single(s)
                                                  : Binding::sequence(TermList{s});
        if (!sigma.bind(p->name, std::move(b))) return false;
      }
      out.push_back(std::move(sigma));
      return true;
    }
    case TermKind::Application: {
      if (s->kind != TermKind::Application || s->sig != p->sig) return false;
      const OperationSignature* assoc = p->sig->associative ? p->sig : nullptr;
      if (!p->sig->commutative)
        return naive_match_seq(s->args, 0, p->args, 0, assoc, false, reg, std::move(sigma), out);
      // commutative: try every permutation of the subject arguments
      TermList perm = s->args;
      std::sort(perm.begin(), perm.end(), term_less);
      bool any = false;
      do {
        any |= naive_match_seq(perm, 0, p->args, 0, assoc, true, reg, sigma, out);
      } while (std::next_permutation(perm.begin(), perm.end(), term_less));
      return any;
    }
  }
  return false;
}

// Deduplicated full-term oracle with constraint filtering.
inline std::vector<Substitution> naive_match(const TermPtr& subject, const Pattern& pattern,
                                             const SignatureRegistry& reg) {
  std::vector<Substitution> raw;
  naive_match_term(canonicalize(subject), canonicalize(pattern.expression), reg, Substitution{},
                   raw);
  std::set<std::string> seen;
  std::vector<Substitution> out;
  for (const auto& sigma : raw) {
    bool ok = true;
    for (const auto& c : pattern.constraints) {
      for (const auto& v : c.required_variables)
        if (!sigma.contains(v)) ok = false;
      if (ok && !c.predicate(sigma)) ok = false;
    }
    if (!ok) continue;
    if (seen.insert(substitution_key(sigma)).second) out.push_back(sigma);
  }
  return out;
}

// ---- random term generators ----

class TermGen {
 public:
  TermGen(SignatureRegistry& reg, std::uint32_t seed) : reg_(reg), gen_(seed) {}

  TermPtr ground(int depth) {
    if (depth == 0 || pick(3) == 0) return symbol();
    const char* ops[] = {"f", "g", "h", "u", "p"};
    const OperationSignature* sig = reg_.find_operation(ops[pick(5)]);
    std::size_t n = sig->variadic ? std::max<std::size_t>(sig->arity, 1 + pick(3)) : sig->arity;
    TermList args;
    for (std::size_t i = 0; i < n; ++i) args.push_back(ground(depth - 1));
    return canonicalize(make_application(sig, std::move(args)));
  }

  TermPtr pattern(int depth) {
    std::size_t roll = pick(10);
    if (depth == 0 || roll < 2) return symbol();
    if (roll < 5) return wildcard();
    const char* ops[] = {"f", "g", "h", "u", "p"};
    const OperationSignature* sig = reg_.find_operation(ops[pick(5)]);
    std::size_t n = sig->variadic ? std::max<std::size_t>(sig->arity, 1 + pick(3)) : sig->arity;
    TermList args;
    for (std::size_t i = 0; i < n; ++i) args.push_back(pattern(depth - 1));
    return canonicalize(make_application(sig, std::move(args)));
  }

  TermPtr symbol() {
    const char* names[] = {"a", "b", "c", "d"};
    const char* name = names[pick(4)];
    if (const SymbolInfo* info = reg_.find_symbol(name))
      return make_symbol(name, info->class_tag, info->properties);
    return make_symbol(name);
  }

  TermPtr wildcard() {
    const char* names[] = {"x", "y", "z"};
    std::size_t roll = pick(10);
    if (roll < 5) {
      std::string cls = roll == 0 ? "T" : "";
      return make_wildcard(WildcardKind::Dot, names[pick(3)], cls);
    }
    if (roll < 8) return make_wildcard(WildcardKind::Star, names[pick(3)]);
    return make_wildcard(WildcardKind::Plus, names[pick(3)]);
  }

  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(gen_()) % n; }

 private:
  SignatureRegistry& reg_;
  std::mt19937 gen_;
};

}  // namespace testutil
