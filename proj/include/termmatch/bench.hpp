#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "termmatch/discrimination_net.hpp"
#include "termmatch/io.hpp"
#include "termmatch/many_to_one.hpp"
#include "termmatch/matching.hpp"
#include "termmatch/syntax.hpp"

namespace termmatch::bench {

// Thin wrapper keeping every random decision on explicit mt19937 draws, so a
// seed pins the corpus byte-for-byte.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(static_cast<std::mt19937::result_type>(seed)) {}

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_()) % n; }

  double unit() { return static_cast<double>(gen_()) / 4294967296.0; }

  bool chance(double p) { return unit() < p; }

  // approximately normal via the central limit of twelve uniforms
  double normal(double mu, double sigma) {
    double s = 0;
    for (int i = 0; i < 12; ++i) s += unit();
    return mu + sigma * (s - 6.0);
  }

 private:
  std::mt19937 gen_;
};

struct Corpus {
  std::unique_ptr<SignatureRegistry> registry;
  std::vector<std::string> pattern_strings;  // `pattern [| constraint]`
  std::vector<std::string> subject_strings;
  std::vector<Pattern> patterns;
  TermList subjects;
  bool syntactic = false;  // deterministic net applicable
};

namespace detail {

inline const char* kMatrixProps[] = {"square", "symmetric", "triangular", "diagonal"};

inline std::string decorate(Rng& rng, const std::string& factor) {
  if (rng.chance(0.2)) return "Transpose(" + factor + ")";
  if (rng.chance(0.1)) return "Inverse(" + factor + ")";
  return factor;
}

inline std::string linalg_product_subject(Rng& rng, const std::vector<std::string>& matrices) {
  int k = static_cast<int>(std::lround(rng.normal(5.0, 1.0)));
  if (k < 2) k = 2;
  std::string s = "Times(";
  for (int i = 0; i < k; ++i) {
    if (i) s += ", ";
    s += decorate(rng, matrices[rng.below(matrices.size())]);
  }
  return s + ")";
}

inline std::string linalg_sum_subject(Rng& rng, const std::vector<std::string>& matrices) {
  std::size_t k = 2 + rng.below(3);
  std::string s = "Plus(";
  for (std::size_t i = 0; i < k; ++i) {
    if (i) s += ", ";
    if (rng.chance(0.3)) {
      s += "Times(" + matrices[rng.below(matrices.size())] + ", " +
           matrices[rng.below(matrices.size())] + ")";
    } else {
      s += matrices[rng.below(matrices.size())];
    }
  }
  return s + ")";
}

}  // namespace detail

// Product/sum patterns over matrix wildcards with property constraints, and
// subjects drawn as 70% products / 30% sums with the factor count sampled
// from Normal(5, 1) clamped to at least 2.
inline Corpus make_linalg_corpus(std::size_t n_patterns, std::size_t n_subjects,
                                 std::uint64_t seed) {
  Corpus c;
  c.registry = std::make_unique<SignatureRegistry>();
  auto& reg = *c.registry;
  reg.add_operation({"Times", 2, true, true, false});
  reg.add_operation({"Plus", 2, true, true, true});
  reg.add_operation({"Transpose", 1, false, false, false});
  reg.add_operation({"Inverse", 1, false, false, false});
  reg.add_operation({"InvTranspose", 1, false, false, false});
  reg.add_class("Matrix");
  reg.add_class("Vector");
  reg.add_class("Scalar");

  Rng rng(seed);
  std::vector<std::string> matrices;
  for (int i = 1; i <= 12; ++i) {
    std::string name = "M" + std::to_string(i);
    SymbolInfo info;
    info.class_tag = "Matrix";
    for (const char* p : detail::kMatrixProps)
      if (rng.chance(0.35)) info.properties.push_back(p);
    reg.declare_symbol(name, std::move(info));
    matrices.push_back(std::move(name));
  }

  // proportions follow 135 products : 61 sums : 3 singletons
  for (std::size_t i = 0; i < n_patterns; ++i) {
    const double r = static_cast<double>(i) / static_cast<double>(n_patterns);
    std::string s;
    if (r < 135.0 / 199.0) {
      std::size_t inner = 2 + rng.below(2);
      s = "Times(h___";
      for (std::size_t j = 0; j < inner; ++j) {
        std::string var(1, static_cast<char>('A' + j));
        std::string factor = var + "_:Matrix";
        if (rng.chance(0.3)) factor = "Transpose(" + factor + ")";
        s += ", " + factor;
      }
      s += ", t___)";
      if (rng.chance(0.4)) {
        s += " | has_property(A, \"";
        s += detail::kMatrixProps[rng.below(4)];
        s += "\")";
      }
    } else if (r < 196.0 / 199.0) {
      s = rng.chance(0.4) ? "Plus(Times(A_:Matrix, B_:Matrix), C_:Matrix, r___)"
                          : "Plus(A_:Matrix, B_:Matrix, r___)";
      if (rng.chance(0.3)) {
        s += " | has_property(A, \"";
        s += detail::kMatrixProps[rng.below(4)];
        s += "\")";
      }
    } else {
      s = "Transpose(A_:Matrix)";
    }
    c.pattern_strings.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < n_subjects; ++i)
    c.subject_strings.push_back(rng.chance(0.7) ? detail::linalg_product_subject(rng, matrices)
                                                : detail::linalg_sum_subject(rng, matrices));

  for (const auto& s : c.pattern_strings) c.patterns.push_back(parse_pattern_string(s, reg));
  for (const auto& s : c.subject_strings) c.subjects.push_back(parse_term(s, reg));
  return c;
}

namespace detail {

// ground term over binary Times / unary Transpose / symbols, depth-bounded
inline std::string syntactic_ground(Rng& rng, const std::vector<std::string>& symbols,
                                    int depth) {
  if (depth == 0 || rng.chance(0.35)) return symbols[rng.below(symbols.size())];
  if (rng.chance(0.25)) return "Transpose(" + syntactic_ground(rng, symbols, depth - 1) + ")";
  return "Times(" + syntactic_ground(rng, symbols, depth - 1) + ", " +
         syntactic_ground(rng, symbols, depth - 1) + ")";
}

// replaces random leaves/subterms with dot wildcards
inline std::string syntactic_pattern_from(Rng& rng, const std::string& ground,
                                          SignatureRegistry& reg, int& var_counter) {
  TermPtr t = parse_term(ground, reg);
  std::function<TermPtr(const TermPtr&, int)> punch = [&](const TermPtr& u, int depth) -> TermPtr {
    if (depth > 0 && rng.chance(0.3))
      return make_wildcard(WildcardKind::Dot, "x" + std::to_string(var_counter++));
    if (u->kind != TermKind::Application) return u;
    TermList args;
    for (const auto& a : u->args) args.push_back(punch(a, depth + 1));
    return make_application(u->sig, std::move(args));
  };
  return format_term(canonicalize(punch(t, 0)));
}

}  // namespace detail

// Syntactic suite: binary (non-associative) operations only, constraint-free
// patterns carved out of random ground terms, so the deterministic net
// applies.
inline Corpus make_syntactic_corpus(std::size_t n_patterns, std::size_t n_subjects,
                                    std::uint64_t seed) {
  Corpus c;
  c.syntactic = true;
  c.registry = std::make_unique<SignatureRegistry>();
  auto& reg = *c.registry;
  reg.add_operation({"Times", 2, false, false, false});
  reg.add_operation({"Plus", 2, false, false, false});
  reg.add_operation({"Transpose", 1, false, false, false});

  Rng rng(seed);
  std::vector<std::string> symbols;
  for (int i = 1; i <= 8; ++i) symbols.push_back("m" + std::to_string(i));

  int var_counter = 0;
  for (std::size_t i = 0; i < n_patterns; ++i) {
    std::string ground = detail::syntactic_ground(rng, symbols, 3);
    c.pattern_strings.push_back(
        detail::syntactic_pattern_from(rng, ground, reg, var_counter));
  }
  for (std::size_t i = 0; i < n_subjects; ++i)
    c.subject_strings.push_back(detail::syntactic_ground(rng, symbols, 4));

  for (const auto& s : c.pattern_strings) c.patterns.push_back(Pattern(parse_term(s, reg)));
  for (const auto& s : c.subject_strings) c.subjects.push_back(parse_term(s, reg));
  return c;
}

struct BenchRow {
  std::string matcher;
  std::size_t patterns = 0;
  std::size_t subjects = 0;
  double setup_s = 0;
  double match_s = 0;
  std::size_t matches = 0;
};

inline void write_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "matcher,patterns,subjects,setup_s,match_s,matches\n";
  for (const auto& r : rows)
    os << r.matcher << ',' << r.patterns << ',' << r.subjects << ',' << r.setup_s << ','
       << r.match_s << ',' << r.matches << '\n';
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

// Runs one matcher kind over the corpus. match_s is the mean over repetitions
// of the time to match every subject; matches is the per-pass total.
inline BenchRow run_one_to_one(const Corpus& corpus, std::size_t repetitions) {
  BenchRow row{"one-to-one", corpus.patterns.size(), corpus.subjects.size(), 0, 0, 0};
  auto t0 = std::chrono::steady_clock::now();
  std::vector<Pattern> compiled = corpus.patterns;  // no further setup needed
  row.setup_s = detail::seconds_since(t0);
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    std::size_t count = 0;
    auto t1 = std::chrono::steady_clock::now();
    for (const auto& s : corpus.subjects)
      for (const auto& p : compiled)
        match(s, p, *corpus.registry, [&](const Substitution&) {
          ++count;
          return true;
        });
    row.match_s += detail::seconds_since(t1);
    row.matches = count;
  }
  row.match_s /= static_cast<double>(repetitions);
  return row;
}

inline BenchRow run_many_to_one(const Corpus& corpus, std::size_t repetitions) {
  BenchRow row{"many-to-one", corpus.patterns.size(), corpus.subjects.size(), 0, 0, 0};
  auto t0 = std::chrono::steady_clock::now();
  ManyToOneMatcher matcher(*corpus.registry);
  for (const auto& p : corpus.patterns) matcher.add_pattern(p);
  row.setup_s = detail::seconds_since(t0);
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    std::size_t count = 0;
    auto t1 = std::chrono::steady_clock::now();
    for (const auto& s : corpus.subjects)
      matcher.match(s, [&](int, const Substitution&) {
        ++count;
        return true;
      });
    row.match_s += detail::seconds_since(t1);
    row.matches = count;
  }
  row.match_s /= static_cast<double>(repetitions);
  return row;
}

inline BenchRow run_deterministic_net(const Corpus& corpus, std::size_t repetitions) {
  BenchRow row{"dn", corpus.patterns.size(), corpus.subjects.size(), 0, 0, 0};
  auto t0 = std::chrono::steady_clock::now();
  DeterministicNet net(*corpus.registry);
  for (const auto& p : corpus.patterns) net.add_pattern(p);
  row.setup_s = detail::seconds_since(t0);
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    std::size_t count = 0;
    auto t1 = std::chrono::steady_clock::now();
    for (const auto& s : corpus.subjects)
      net.match(s, [&](int, const Substitution&) {
        ++count;
        return true;
      });
    row.match_s += detail::seconds_since(t1);
    row.matches = count;
  }
  row.match_s /= static_cast<double>(repetitions);
  return row;
}

// All applicable matchers; rows[i].matches must agree (the caller treats a
// mismatch as a correctness regression).
inline std::vector<BenchRow> run_suite(const Corpus& corpus, std::size_t repetitions) {
  std::vector<BenchRow> rows;
  rows.push_back(run_one_to_one(corpus, repetitions));
  rows.push_back(run_many_to_one(corpus, repetitions));
  if (corpus.syntactic) rows.push_back(run_deterministic_net(corpus, repetitions));
  return rows;
}

inline bool match_counts_agree(const std::vector<BenchRow>& rows) {
  for (const auto& r : rows)
    if (r.matches != rows.front().matches) return false;
  return true;
}

}  // namespace termmatch::bench
