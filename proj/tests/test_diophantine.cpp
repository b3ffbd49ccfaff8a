#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "helpers.hpp"
#include "termmatch/diophantine.hpp"

using namespace termmatch;

namespace {

// grid brute force over x_i in [0, constant]
std::set<SolutionVector> grid_solutions(const std::vector<long long>& coeffs, long long d) {
  std::set<SolutionVector> out;
  SolutionVector x(coeffs.size(), 0);
  std::function<void(std::size_t, long long)> rec = [&](std::size_t i, long long acc) {
    if (acc > d) return;
    if (i == coeffs.size()) {
      if (acc == d) out.insert(x);
      return;
    }
    for (long long v = 0; acc + coeffs[i] * v <= d; ++v) {
      x[i] = v;
      rec(i + 1, acc + coeffs[i] * v);
    }
  };
  rec(0, 0);
  return out;
}

}  // namespace

TEST_CASE("extended gcd identity") {
  for (long long a = 1; a <= 12; ++a)
    for (long long b = 1; b <= 12; ++b) {
      ExtendedGcd e = extended_gcd(a, b);
      CHECK(a * e.u + b * e.v == e.g);
      CHECK(a % e.g == 0);
      CHECK(b % e.g == 0);
    }
}

TEST_CASE("two variable solver matches brute force") {
  for (long long a = 1; a <= 5; ++a)
    for (long long b = 1; b <= 5; ++b)
      for (long long d = 0; d <= 12; ++d) {
        std::set<SolutionVector> got;
        long long last_x = -1;
        solve_two_var(a, b, d, [&](long long x, long long y) {
          CHECK(x > last_x);  // emitted in increasing x
          last_x = x;
          CHECK(a * x + b * y == d);
          CHECK(x >= 0);
          CHECK(y >= 0);
          got.insert({x, y});
        });
        CHECK(got == grid_solutions({a, b}, d));
      }
}

TEST_CASE("coefficient pair (1, 2) worked equations") {
  DiophantineCache cache;
  // x + 2y = 1 has only (1, 0); x + 2y = 3 has (1, 1) and (3, 0)
  auto s1 = cache.solve({1, 2}, 1);
  CHECK(std::set<SolutionVector>(s1.begin(), s1.end()) ==
        std::set<SolutionVector>{{1, 0}});
  auto s3 = cache.solve({1, 2}, 3);
  CHECK(std::set<SolutionVector>(s3.begin(), s3.end()) ==
        std::set<SolutionVector>{{1, 1}, {3, 0}});
}

TEST_CASE("general solver matches grid brute force") {
  DiophantineCache cache;
  std::mt19937 gen(2024);
  for (int i = 0; i < 400; ++i) {
    std::size_t n = 1 + gen() % 4;
    std::vector<long long> coeffs;
    for (std::size_t j = 0; j < n; ++j) coeffs.push_back(1 + gen() % 3);
    long long d = static_cast<long long>(gen() % 9);
    const auto& got = cache.solve(coeffs, d);
    std::set<SolutionVector> got_set(got.begin(), got.end());
    CHECK(got_set.size() == got.size());  // no duplicates
    CHECK(got_set == grid_solutions(coeffs, d));
  }
}

TEST_CASE("cache returns the same object for repeated queries") {
  DiophantineCache cache;
  const auto& a = cache.solve({2, 3}, 12);
  const auto& b = cache.solve({2, 3}, 12);
  CHECK(&a == &b);
  CHECK(cache.size() >= 1);
  cache.clear();
  CHECK(cache.size() == 0);
}

TEST_CASE("distribute matches assignment brute force") {
  SignatureRegistry reg = testutil::make_mixed_registry();
  testutil::TermGen gen(reg, 11);
  std::mt19937 rnd(5);

  for (int iter = 0; iter < 300; ++iter) {
    // subjects: up to 5 occurrences drawn from a small pool
    TermList pool{gen.symbol(), gen.symbol(), gen.ground(1)};
    TermList occurrences;
    std::size_t n = rnd() % 6;
    for (std::size_t i = 0; i < n; ++i) occurrences.push_back(pool[rnd() % pool.size()]);
    TermMultiset subjects = to_multiset(occurrences);

    std::size_t nvars = 1 + rnd() % 3;
    std::vector<SequenceVarSpec> vars;
    for (std::size_t i = 0; i < nvars; ++i) {
      SequenceVarSpec v;
      v.name = std::string(1, static_cast<char>('x' + i));
      v.min_total = static_cast<int>(rnd() % 2);
      v.multiplicity = 1 + static_cast<int>(rnd() % 2);
      vars.push_back(v);
    }

    std::set<std::string> got;
    distribute(subjects, vars, Substitution{}, [&](const Substitution& sigma) {
      CHECK(got.insert(substitution_key(sigma)).second);  // no duplicates
      return true;
    });

    // brute force: assign each occurrence (expanded) to one variable
    std::set<std::string> expected;
    TermList expanded;
    for (const auto& [t, c] : subjects)
      for (int i = 0; i < c; ++i) expanded.push_back(t);
    std::vector<std::size_t> owner(expanded.size(), 0);
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == expanded.size()) {
        // each variable receives its multiset; multiplicity m means the
        // variable's content is repeated m times, so totals must divide
        Substitution sigma;
        for (std::size_t v = 0; v < vars.size(); ++v) {
          TermMultiset mine;
          for (std::size_t j = 0; j < expanded.size(); ++j)
            if (owner[j] == v) {
              TermMultiset one = to_multiset({expanded[j]});
              for (auto& [t, c] : one) {
                bool found = false;
                for (auto& [mt, mc] : mine)
                  if (term_equal(mt, t)) {
                    mc += c;
                    found = true;
                  }
                if (!found) mine.emplace_back(t, c);
              }
            }
          TermList seq;
          bool divisible = true;
          for (auto& [t, c] : mine) {
            if (c % vars[v].multiplicity != 0) divisible = false;
            for (int r = 0; divisible && r < c / vars[v].multiplicity; ++r) seq.push_back(t);
          }
          if (!divisible) return;
          std::sort(seq.begin(), seq.end(), term_less);
          if (static_cast<int>(seq.size()) < vars[v].min_total) return;
          if (!sigma.bind(vars[v].name, Binding::sequence(std::move(seq)))) return;
        }
        expected.insert(substitution_key(sigma));
        return;
      }
      for (std::size_t v = 0; v < vars.size(); ++v) {
        owner[i] = v;
        rec(i + 1);
      }
    };
    rec(0);
    CHECK(got == expected);
  }
}

TEST_CASE("distribute respects prior bindings and wrap signatures") {
  SignatureRegistry reg = testutil::make_mixed_registry();
  const OperationSignature* g = reg.find_operation("g");
  auto a = parse_term("a", reg);
  auto b = parse_term("b", reg);

  SECTION("prior binding filters incompatible distributions") {
    TermMultiset subjects = to_multiset({a, b});
    std::vector<SequenceVarSpec> vars{{"x", 0, 1, nullptr}, {"y", 0, 1, nullptr}};
    Substitution prior;
    REQUIRE(prior.bind("x", Binding::sequence({a})));
    std::vector<Substitution> out;
    distribute(subjects, vars, prior, [&](const Substitution& s) {
      out.push_back(s);
      return true;
    });
    REQUIRE(out.size() == 1);
    CHECK(format_substitution(out[0]) == "{x -> (a), y -> (b)}");
  }

  SECTION("wrap signature produces a single term binding") {
    TermMultiset subjects = to_multiset({a, b});
    std::vector<SequenceVarSpec> vars{{"x", 1, 1, g}};
    std::vector<Substitution> out;
    distribute(subjects, vars, Substitution{}, [&](const Substitution& s) {
      out.push_back(s);
      return true;
    });
    REQUIRE(out.size() == 1);
    CHECK(format_substitution(out[0]) == "{x -> g(a, b)}");
  }
}
