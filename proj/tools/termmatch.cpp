#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "termmatch/bench.hpp"
#include "termmatch/discrimination_net.hpp"
#include "termmatch/io.hpp"
#include "termmatch/many_to_one.hpp"
#include "termmatch/matching.hpp"
#include "termmatch/rewriting.hpp"
#include "termmatch/syntax.hpp"

namespace {

using namespace termmatch;

SignatureRegistry load_registry(const std::string& path) {
  if (path.empty()) return SignatureRegistry{};
  return load_signature_file(path);
}

struct MatchOptions {
  std::string sig_file;
  std::vector<std::string> pattern_strings;
  std::string subject_string;
  bool first = false;
  std::string matcher = "one-to-one";
};

int run_match(const MatchOptions& opt) {
  SignatureRegistry reg = load_registry(opt.sig_file);
  std::vector<Pattern> patterns;
  for (const auto& ps : opt.pattern_strings) patterns.push_back(parse_pattern_string(ps, reg));
  TermPtr subject = parse_term(opt.subject_string, reg);
  const bool show_ids = patterns.size() > 1;

  bool found = false;
  auto print = [&](int pid, const Substitution& sigma) {
    found = true;
    if (show_ids) std::cout << pid << " with ";
    std::cout << format_substitution(sigma) << "\n";
    return !opt.first;
  };

  if (opt.matcher == "one-to-one") {
    for (std::size_t i = 0; i < patterns.size(); ++i) {
      bool keep_going = match(subject, patterns[i], reg, [&](const Substitution& sigma) {
        return print(static_cast<int>(i), sigma);
      });
      if (!keep_going) break;
    }
  } else if (opt.matcher == "many-to-one") {
    ManyToOneMatcher m(reg);
    for (const auto& p : patterns) m.add_pattern(p);
    m.match(subject, print);
  } else if (opt.matcher == "dn") {
    DeterministicNet net(reg);
    for (const auto& p : patterns) net.add_pattern(p);
    net.match(subject, print);
  } else {
    std::cerr << "unknown matcher '" << opt.matcher << "'\n";
    return 2;
  }
  return found ? 0 : 1;
}

struct RewriteOptions {
  std::string sig_file;
  std::string rules_file;
  std::string subject_string;
  std::size_t max_iter = 10000;
};

int run_rewrite(const RewriteOptions& opt) {
  SignatureRegistry reg = load_registry(opt.sig_file);
  std::vector<ReplacementRule> rules = load_rules_file(opt.rules_file, reg);
  TermPtr subject = parse_term(opt.subject_string, reg);
  try {
    TermPtr result = replace_all(subject, rules, reg, RewriteConfig{opt.max_iter});
    std::cout << format_term(result) << "\n";
    return 0;
  } catch (const NonTerminationError& e) {
    std::cerr << "iteration limit reached; intermediate term: "
              << format_term(e.intermediate) << "\n";
    return 3;
  }
}

struct BenchOptions {
  std::string suite = "linalg";
  std::size_t patterns = 100;
  std::size_t subjects = 200;
  std::optional<std::uint64_t> seed;
  std::size_t repetitions = 3;
  std::string out_file;
};

int run_bench(const BenchOptions& opt) {
  std::uint64_t seed = 0;
  if (opt.seed) {
    seed = *opt.seed;
  } else if (const char* env = std::getenv("TERMMATCH_SEED")) {
    seed = std::strtoull(env, nullptr, 10);
  }
  bench::Corpus corpus = opt.suite == "syntactic"
                             ? bench::make_syntactic_corpus(opt.patterns, opt.subjects, seed)
                             : bench::make_linalg_corpus(opt.patterns, opt.subjects, seed);
  std::vector<bench::BenchRow> rows = bench::run_suite(corpus, opt.repetitions);
  if (!bench::match_counts_agree(rows)) {
    std::cerr << "match-count mismatch across matchers\n";
    bench::write_csv(std::cerr, rows);
    return 4;
  }
  if (!opt.out_file.empty()) {
    std::ofstream f(opt.out_file);
    if (!f) {
      std::cerr << "cannot open '" << opt.out_file << "'\n";
      return 2;
    }
    bench::write_csv(f, rows);
  } else {
    bench::write_csv(std::cout, rows);
  }
  return 0;
}

struct NetSaveOptions {
  std::string sig_file;
  std::vector<std::string> pattern_strings;
  std::string out_file;
};

int run_net_save(const NetSaveOptions& opt) {
  SignatureRegistry reg = load_registry(opt.sig_file);
  ManyToOneMatcher m(reg);
  for (const auto& ps : opt.pattern_strings) m.add_pattern(parse_pattern_string(ps, reg));
  std::ofstream f(opt.out_file, std::ios::binary);
  if (!f) {
    std::cerr << "cannot open '" << opt.out_file << "'\n";
    return 2;
  }
  m.save(f);
  std::cout << "saved " << opt.pattern_strings.size() << " patterns, " << m.state_count()
            << " states\n";
  return 0;
}

struct NetLoadOptions {
  std::string sig_file;
  std::string in_file;
  std::string subject_string;  // optional: match after loading
  bool first = false;
};

int run_net_load(const NetLoadOptions& opt) {
  SignatureRegistry reg = load_registry(opt.sig_file);
  std::ifstream f(opt.in_file, std::ios::binary);
  if (!f) {
    std::cerr << "cannot open '" << opt.in_file << "'\n";
    return 2;
  }
  ManyToOneMatcher m = ManyToOneMatcher::load(f, reg, parse_constraint);
  if (opt.subject_string.empty()) {
    std::cout << "loaded " << m.patterns().size() << " patterns, " << m.state_count()
              << " states\n";
    return 0;
  }
  TermPtr subject = parse_term(opt.subject_string, reg);
  bool found = false;
  m.match(subject, [&](int pid, const Substitution& sigma) {
    found = true;
    std::cout << pid << " with " << format_substitution(sigma) << "\n";
    return !opt.first;
  });
  return found ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"term pattern matching and rewriting"};
  app.require_subcommand(1);

  MatchOptions match_opt;
  auto* cmd_match = app.add_subcommand("match", "match patterns against a subject");
  cmd_match->add_option("--sig", match_opt.sig_file, "signature file");
  cmd_match->add_option("-p,--pattern", match_opt.pattern_strings, "pattern [| constraint]")
      ->required();
  cmd_match->add_option("-s,--subject", match_opt.subject_string, "subject term")->required();
  auto* first_flag = cmd_match->add_flag("--first", match_opt.first, "stop after one match");
  cmd_match->add_flag("--all", "emit every match (default)")->excludes(first_flag);
  cmd_match->add_option("--matcher", match_opt.matcher, "one-to-one | many-to-one | dn")
      ->check(CLI::IsMember({"one-to-one", "many-to-one", "dn"}));

  RewriteOptions rewrite_opt;
  auto* cmd_rewrite = app.add_subcommand("rewrite", "rewrite a subject to normal form");
  cmd_rewrite->add_option("--sig", rewrite_opt.sig_file, "signature file");
  cmd_rewrite->add_option("--rules", rewrite_opt.rules_file, "rules file")->required();
  cmd_rewrite->add_option("-s,--subject", rewrite_opt.subject_string, "subject term")->required();
  cmd_rewrite->add_option("--max-iter", rewrite_opt.max_iter, "iteration limit");

  BenchOptions bench_opt;
  auto* cmd_bench = app.add_subcommand("bench", "run the benchmark suites");
  cmd_bench->add_option("--suite", bench_opt.suite, "linalg | syntactic")
      ->check(CLI::IsMember({"linalg", "syntactic"}));
  cmd_bench->add_option("--patterns", bench_opt.patterns, "pattern count");
  cmd_bench->add_option("--subjects", bench_opt.subjects, "subject count");
  cmd_bench->add_option("--seed", bench_opt.seed, "corpus seed (default: $TERMMATCH_SEED or 0)");
  cmd_bench->add_option("--repetitions", bench_opt.repetitions, "timing repetitions");
  cmd_bench->add_option("--out", bench_opt.out_file, "CSV output file (default: stdout)");

  auto* cmd_net = app.add_subcommand("net", "save or load a many-to-one matcher");
  cmd_net->require_subcommand(1);
  NetSaveOptions save_opt;
  auto* cmd_save = cmd_net->add_subcommand("save", "build a matcher and serialize it");
  cmd_save->add_option("--sig", save_opt.sig_file, "signature file");
  cmd_save->add_option("-p,--pattern", save_opt.pattern_strings, "pattern [| constraint]")
      ->required();
  cmd_save->add_option("--out", save_opt.out_file, "output file")->required();
  NetLoadOptions load_opt;
  auto* cmd_load = cmd_net->add_subcommand("load", "load a matcher (and optionally match)");
  cmd_load->add_option("--sig", load_opt.sig_file, "signature file");
  cmd_load->add_option("--in", load_opt.in_file, "input file")->required();
  cmd_load->add_option("-s,--subject", load_opt.subject_string, "subject term to match");
  cmd_load->add_flag("--first", load_opt.first, "stop after one match");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (cmd_match->parsed()) return run_match(match_opt);
    if (cmd_rewrite->parsed()) return run_rewrite(rewrite_opt);
    if (cmd_bench->parsed()) return run_bench(bench_opt);
    if (cmd_save->parsed()) return run_net_save(save_opt);
    if (cmd_load->parsed()) return run_net_load(load_opt);
  } catch (const TermError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
