#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "termmatch/term.hpp"

namespace termmatch {

struct ExtendedGcd {
  long long g, u, v;  // a*u + b*v == g == gcd(a, b)
};

inline ExtendedGcd extended_gcd(long long a, long long b) {
  long long old_r = a, r = b;
  long long old_u = 1, u = 0;
  long long old_v = 0, v = 1;
  while (r != 0) {
    long long q = old_r / r;
    old_r = std::exchange(r, old_r - q * r);
    old_u = std::exchange(u, old_u - q * u);
    old_v = std::exchange(v, old_v - q * v);
  }
  return {old_r, old_u, old_v};
}

using SolutionVector = std::vector<long long>;

// All non-negative (x, y) with a*x + b*y == d, in increasing x.
template <typename Fn>
void solve_two_var(long long a, long long b, long long d, Fn&& emit) {
  ExtendedGcd e = extended_gcd(a, b);
  if (d % e.g != 0) return;
  long long bs = b / e.g;  // x step
  // smallest non-negative x with a*x ≡ d (mod b)
  long long x = (e.u % bs) * ((d / e.g) % bs) % bs;
  if (x < 0) x += bs;
  for (; a * x <= d; x += bs) emit(x, (d - a * x) / b);
}

// Cache for non-negative Diophantine solutions, keyed by the structural
// equation. Concurrent readers are fine once warmed; writes are serialized.
class DiophantineCache {
 public:
  const std::vector<SolutionVector>& solve(const std::vector<long long>& coefficients,
                                           long long constant) {
    Key key{coefficients, constant};
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    std::vector<SolutionVector> solutions = compute(coefficients, constant);
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(std::move(key), std::move(solutions)).first->second;
  }

  void clear() {
    std::lock_guard<std::mutex> lock(mutex_);
    cache_.clear();
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.size();
  }

 private:
  using Key = std::pair<std::vector<long long>, long long>;

  // Recursively reduces a1*x1 + ... + an*xn = d to two-variable equations:
  // a1*x1 + g*t = d with g = gcd(a2..an), then the tail must sum to g*t.
  std::vector<SolutionVector> compute(const std::vector<long long>& coeffs, long long d) {
    std::vector<SolutionVector> out;
    if (coeffs.size() == 1) {
      if (d % coeffs[0] == 0) out.push_back({d / coeffs[0]});
      return out;
    }
    if (coeffs.size() == 2) {
      solve_two_var(coeffs[0], coeffs[1], d,
                    [&](long long x, long long y) { out.push_back({x, y}); });
      return out;
    }
    std::vector<long long> tail(coeffs.begin() + 1, coeffs.end());
    long long g = tail[0];
    for (std::size_t i = 1; i < tail.size(); ++i) g = std::gcd(g, tail[i]);
    solve_two_var(coeffs[0], g, d, [&](long long x, long long t) {
      for (const auto& rest : solve(tail, g * t)) {
        SolutionVector sol;
        sol.reserve(coeffs.size());
        sol.push_back(x);
        sol.insert(sol.end(), rest.begin(), rest.end());
        out.push_back(std::move(sol));
      }
    });
    return out;
  }

  mutable std::mutex mutex_;
  std::map<Key, std::vector<SolutionVector>> cache_;
};

inline DiophantineCache& default_diophantine_cache() {
  static DiophantineCache cache;
  return cache;
}

inline const std::vector<SolutionVector>& solve_nonneg(
    const std::vector<long long>& coefficients, long long constant,
    DiophantineCache& cache = default_diophantine_cache()) {
  return cache.solve(coefficients, constant);
}

// Distinct terms with multiplicities, sorted by the total term order.
using TermMultiset = std::vector<std::pair<TermPtr, int>>;

inline TermMultiset to_multiset(const TermList& terms) {
  TermList sorted = terms;
  std::stable_sort(sorted.begin(), sorted.end(), term_less);
  TermMultiset out;
  for (const auto& t : sorted) {
    if (!out.empty() && term_equal(out.back().first, t))
      ++out.back().second;
    else
      out.emplace_back(t, 1);
  }
  return out;
}

struct SequenceVarSpec {
  std::string name;  // "" = anonymous, binding discarded
  int min_total = 0;  // 0 for star, 1 for plus and associative dot variables
  int multiplicity = 1;
  // Non-null for dot variables absorbing arguments of an associative
  // operation: the binding becomes a single term, wrapped when length > 1.
  const OperationSignature* wrap_sig = nullptr;
};

// Distributes a subject multiset onto sequence variables by combining one
// solution per distinct subject term; plus variables must end up nonempty and
// bindings must agree with prior. Emits until the sink returns false.
template <typename Sink>
bool distribute(const TermMultiset& subjects, const std::vector<SequenceVarSpec>& vars,
                const Substitution& prior, Sink&& sink,
                DiophantineCache& cache = default_diophantine_cache()) {
  if (vars.empty()) {
    if (!subjects.empty()) return true;  // no way to place leftovers
    return sink(prior);
  }
  std::vector<long long> coefficients;
  coefficients.reserve(vars.size());
  for (const auto& v : vars) coefficients.push_back(v.multiplicity);

  std::vector<const std::vector<SolutionVector>*> per_term;
  per_term.reserve(subjects.size());
  for (const auto& [term, count] : subjects) {
    const auto& sols = solve_nonneg(coefficients, count, cache);
    if (sols.empty()) return true;
    per_term.push_back(&sols);
  }

  std::set<std::string> seen;
  std::vector<const SolutionVector*> chosen(per_term.size());
  std::function<bool(std::size_t)> rec = [&](std::size_t i) -> bool {
    if (i == per_term.size()) {
      Substitution sigma = prior;
      for (std::size_t j = 0; j < vars.size(); ++j) {
        const auto& v = vars[j];
        TermList seq;
        for (std::size_t k = 0; k < subjects.size(); ++k)
          for (long long c = 0; c < (*chosen[k])[j]; ++c) seq.push_back(subjects[k].first);
        if (static_cast<int>(seq.size()) < v.min_total) return true;
        if (v.name.empty()) continue;
        Binding b;
        if (v.wrap_sig) {
          if (seq.size() == 1) {
            b = Binding::single(seq[0]);
          } else {
            if (seq.size() < v.wrap_sig->arity) return true;
            b = Binding::single(canonicalize(make_application(v.wrap_sig, std::move(seq))));
          }
        } else {
          b = Binding::sequence(std::move(seq));
        }
        if (!sigma.bind(v.name, std::move(b))) return true;
      }
      // distributions differing only in anonymous variables collapse here
      if (!seen.insert(substitution_key(sigma)).second) return true;
      return sink(sigma);
    }
    for (const auto& sol : *per_term[i]) {
      chosen[i] = &sol;
      if (!rec(i + 1)) return false;
    }
    return true;
  };
  return rec(0);
}

}  // namespace termmatch
