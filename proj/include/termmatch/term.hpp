#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace termmatch {

struct TermError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MalformedTermError : TermError {
  using TermError::TermError;
};
struct IncompleteSubstitutionError : TermError {
  using TermError::TermError;
};
struct ShapeError : TermError {
  using TermError::TermError;
};
struct InvalidSubjectError : TermError {
  using TermError::TermError;
};

struct OperationSignature {
  std::string name;
  std::size_t arity = 0;  // minimum argument count when variadic, exact otherwise
  bool variadic = true;
  bool associative = false;
  bool commutative = false;
};

struct SymbolInfo {
  std::string class_tag;
  std::vector<std::string> properties;  // sorted
};

// Holds operation signatures, the symbol class hierarchy and declared symbols.
// Built once, then read-only.
class SignatureRegistry {
 public:
  const OperationSignature* add_operation(OperationSignature sig) {
    if (sig.associative && !sig.variadic)
      throw MalformedTermError("associative operation '" + sig.name + "' must be variadic");
    auto [it, inserted] = ops_.emplace(sig.name, sig);
    if (!inserted) throw MalformedTermError("duplicate operation '" + sig.name + "'");
    return &it->second;
  }

  const OperationSignature* find_operation(const std::string& name) const {
    auto it = ops_.find(name);
    return it == ops_.end() ? nullptr : &it->second;
  }

  // Unknown operations default to plain variadic, mirroring the library default.
  const OperationSignature* get_or_default(const std::string& name) {
    if (auto* s = find_operation(name)) return s;
    return add_operation(OperationSignature{name});
  }

  void add_class(const std::string& name, const std::string& parent = "") {
    if (classes_.count(name)) throw MalformedTermError("duplicate class '" + name + "'");
    if (!parent.empty() && !classes_.count(parent))
      throw MalformedTermError("unknown parent class '" + parent + "'");
    classes_[name] = parent;
  }

  bool has_class(const std::string& name) const { return classes_.count(name) != 0; }

  bool class_is_a(const std::string& cls, const std::string& ancestor) const {
    std::string c = cls;
    while (!c.empty()) {
      if (c == ancestor) return true;
      auto it = classes_.find(c);
      if (it == classes_.end()) return false;
      c = it->second;
    }
    return false;
  }

  void declare_symbol(const std::string& name, SymbolInfo info) {
    std::sort(info.properties.begin(), info.properties.end());
    symbols_[name] = std::move(info);
  }

  const SymbolInfo* find_symbol(const std::string& name) const {
    auto it = symbols_.find(name);
    return it == symbols_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, OperationSignature>& operations() const { return ops_; }
  const std::map<std::string, std::string>& classes() const { return classes_; }
  const std::map<std::string, SymbolInfo>& symbols() const { return symbols_; }

 private:
  std::map<std::string, OperationSignature> ops_;  // node-stable addresses
  std::map<std::string, std::string> classes_;     // class -> parent ("" = root)
  std::map<std::string, SymbolInfo> symbols_;
};

enum class TermKind { Symbol, Application, Wildcard };
enum class WildcardKind { Dot, Plus, Star };

struct Term;
using TermPtr = std::shared_ptr<const Term>;
using TermList = std::vector<TermPtr>;

struct Term {
  TermKind kind;
  std::string name;       // symbol name or wildcard name ("" = anonymous)
  std::string class_tag;  // symbol class, or dot wildcard class restriction
  std::vector<std::string> properties;  // symbols only, sorted
  WildcardKind wkind = WildcardKind::Dot;
  const OperationSignature* sig = nullptr;
  TermList args;

  bool has_property(const std::string& p) const {
    return std::binary_search(properties.begin(), properties.end(), p);
  }
};

inline TermPtr make_symbol(std::string name, std::string class_tag = "",
                           std::vector<std::string> properties = {}) {
  auto t = std::make_shared<Term>();
  t->kind = TermKind::Symbol;
  t->name = std::move(name);
  t->class_tag = std::move(class_tag);
  std::sort(properties.begin(), properties.end());
  t->properties = std::move(properties);
  return t;
}

inline TermPtr make_wildcard(WildcardKind kind, std::string name = "",
                             std::string class_restriction = "") {
  if (!class_restriction.empty() && kind != WildcardKind::Dot)
    throw MalformedTermError("class restriction only allowed for dot wildcards");
  auto t = std::make_shared<Term>();
  t->kind = TermKind::Wildcard;
  t->wkind = kind;
  t->name = std::move(name);
  t->class_tag = std::move(class_restriction);
  return t;
}

inline TermPtr make_application(const OperationSignature* sig, TermList args) {
  auto t = std::make_shared<Term>();
  t->kind = TermKind::Application;
  t->sig = sig;
  t->args = std::move(args);
  return t;
}

// Strict total order: symbols < applications < wildcards; symbols by name;
// applications by signature name, then argument count, then args
// lexicographically; wildcards by (kind, name, class restriction).
inline int compare_terms(const TermPtr& a, const TermPtr& b) {
  auto rank = [](TermKind k) {
    switch (k) {
      case TermKind::Symbol: return 0;
      case TermKind::Application: return 1;
      case TermKind::Wildcard: return 2;
    }
    return 3;
  };
  if (int d = rank(a->kind) - rank(b->kind); d != 0) return d < 0 ? -1 : 1;
  switch (a->kind) {
    case TermKind::Symbol:
      return a->name.compare(b->name) < 0 ? -1 : (a->name == b->name ? 0 : 1);
    case TermKind::Application: {
      if (int d = a->sig->name.compare(b->sig->name); d != 0) return d < 0 ? -1 : 1;
      if (a->args.size() != b->args.size()) return a->args.size() < b->args.size() ? -1 : 1;
      for (std::size_t i = 0; i < a->args.size(); ++i)
        if (int d = compare_terms(a->args[i], b->args[i]); d != 0) return d;
      return 0;
    }
    case TermKind::Wildcard: {
      if (a->wkind != b->wkind)
        return static_cast<int>(a->wkind) < static_cast<int>(b->wkind) ? -1 : 1;
      if (int d = a->name.compare(b->name); d != 0) return d < 0 ? -1 : 1;
      if (int d = a->class_tag.compare(b->class_tag); d != 0) return d < 0 ? -1 : 1;
      return 0;
    }
  }
  return 0;
}

inline bool term_equal(const TermPtr& a, const TermPtr& b) {
  return a == b || compare_terms(a, b) == 0;
}

inline bool term_less(const TermPtr& a, const TermPtr& b) { return compare_terms(a, b) < 0; }

inline bool is_ground(const TermPtr& t) {
  if (t->kind == TermKind::Wildcard) return false;
  for (const auto& a : t->args)
    if (!is_ground(a)) return false;
  return true;
}

// Unique canonical form: associative same-signature children are spliced into
// the parent (bottom-up), commutative argument lists are sorted. Idempotent.
inline TermPtr canonicalize(const TermPtr& t) {
  if (t->kind != TermKind::Application) return t;
  TermList args;
  args.reserve(t->args.size());
  bool changed = false;
  for (const auto& a : t->args) {
    TermPtr c = canonicalize(a);
    if (c != a) changed = true;
    if (t->sig->associative && c->kind == TermKind::Application && c->sig == t->sig) {
      args.insert(args.end(), c->args.begin(), c->args.end());
      changed = true;
    } else {
      args.push_back(std::move(c));
    }
  }
  if (args.size() < t->sig->arity || (!t->sig->variadic && args.size() != t->sig->arity))
    throw MalformedTermError("arity violation for operation '" + t->sig->name + "'");
  if (t->sig->commutative) {
    if (!std::is_sorted(args.begin(), args.end(), term_less)) {
      std::stable_sort(args.begin(), args.end(), term_less);
      changed = true;
    }
  }
  if (!changed) return t;
  return make_application(t->sig, std::move(args));
}

// A binding is a single term or an ordered term sequence. Dot variables bind
// single terms, star/plus variables bind sequences (even length-1 ones).
struct Binding {
  bool is_sequence = false;
  TermList terms;

  static Binding single(TermPtr t) { return Binding{false, {std::move(t)}}; }
  static Binding sequence(TermList ts) { return Binding{true, std::move(ts)}; }
};

inline bool binding_equal(const Binding& a, const Binding& b) {
  if (a.is_sequence != b.is_sequence || a.terms.size() != b.terms.size()) return false;
  for (std::size_t i = 0; i < a.terms.size(); ++i)
    if (!term_equal(a.terms[i], b.terms[i])) return false;
  return true;
}

class Substitution {
 public:
  const Binding* find(const std::string& name) const {
    auto it = bindings_.find(name);
    return it == bindings_.end() ? nullptr : &it->second;
  }

  // Returns false on a contradicting existing binding.
  [[nodiscard]] bool bind(const std::string& name, Binding b) {
    auto it = bindings_.find(name);
    if (it != bindings_.end()) return binding_equal(it->second, b);
    bindings_.emplace(name, std::move(b));
    return true;
  }

  bool contains(const std::string& name) const { return bindings_.count(name) != 0; }
  bool empty() const { return bindings_.empty(); }
  std::size_t size() const { return bindings_.size(); }
  const std::map<std::string, Binding>& bindings() const { return bindings_; }

  friend bool operator==(const Substitution& a, const Substitution& b) {
    if (a.bindings_.size() != b.bindings_.size()) return false;
    auto it = b.bindings_.begin();
    for (const auto& [k, v] : a.bindings_) {
      if (it->first != k || !binding_equal(it->second, v)) return false;
      ++it;
    }
    return true;
  }

 private:
  std::map<std::string, Binding> bindings_;
};

// Union of bindings; empty optional iff some variable has contradicting values.
inline std::optional<Substitution> merge(const Substitution& a, const Substitution& b) {
  Substitution out = a;
  for (const auto& [name, binding] : b.bindings())
    if (!out.bind(name, binding)) return std::nullopt;
  return out;
}

struct Constraint {
  std::vector<std::string> required_variables;  // sorted
  std::function<bool(const Substitution&)> predicate;
  std::string source;  // textual form when available (enables serialization)
};

inline Constraint make_constraint(std::vector<std::string> required,
                                  std::function<bool(const Substitution&)> predicate,
                                  std::string source = "") {
  std::sort(required.begin(), required.end());
  return Constraint{std::move(required), std::move(predicate), std::move(source)};
}

struct Pattern {
  TermPtr expression;
  std::vector<Constraint> constraints;

  Pattern() = default;
  explicit Pattern(TermPtr expr, std::vector<Constraint> cs = {})
      : expression(std::move(expr)), constraints(std::move(cs)) {}
};

namespace detail {
inline void substitute_into(const TermPtr& t, const Substitution& sigma, TermList& out) {
  switch (t->kind) {
    case TermKind::Symbol:
      out.push_back(t);
      return;
    case TermKind::Wildcard: {
      if (t->name.empty())
        throw IncompleteSubstitutionError("cannot substitute anonymous wildcard");
      const Binding* b = sigma.find(t->name);
      if (!b) throw IncompleteSubstitutionError("unbound variable '" + t->name + "'");
      out.insert(out.end(), b->terms.begin(), b->terms.end());
      return;
    }
    case TermKind::Application: {
      TermList args;
      for (const auto& a : t->args) substitute_into(a, sigma, args);
      out.push_back(canonicalize(make_application(t->sig, std::move(args))));
      return;
    }
  }
}
}  // namespace detail

// Replaces wildcards by their bindings, splicing sequences into the
// surrounding argument list; the result is canonical.
inline TermPtr substitute(const TermPtr& pattern, const Substitution& sigma) {
  TermList out;
  detail::substitute_into(pattern, sigma, out);
  if (out.size() != 1)
    throw ShapeError("sequence binding at a position requiring a single term");
  return canonicalize(out[0]);
}

// Named wildcards with multiplicity; anonymous wildcards are excluded.
inline std::map<std::pair<std::string, WildcardKind>, int> variables_of(const TermPtr& t) {
  std::map<std::pair<std::string, WildcardKind>, int> out;
  std::function<void(const TermPtr&)> walk = [&](const TermPtr& u) {
    if (u->kind == TermKind::Wildcard) {
      if (!u->name.empty()) ++out[{u->name, u->wkind}];
    } else {
      for (const auto& a : u->args) walk(a);
    }
  };
  walk(t);
  return out;
}

inline bool is_syntactic_term(const TermPtr& t) {
  switch (t->kind) {
    case TermKind::Symbol:
      return true;
    case TermKind::Wildcard:
      return t->wkind == WildcardKind::Dot;
    case TermKind::Application:
      if (t->sig->associative || t->sig->commutative) return false;
      for (const auto& a : t->args)
        if (!is_syntactic_term(a)) return false;
      return true;
  }
  return false;
}

inline bool is_syntactic(const Pattern& p) {
  return p.constraints.empty() && is_syntactic_term(p.expression);
}

// Structural key usable for hashing/dedup; injective on canonical terms.
inline void term_key_into(const TermPtr& t, std::string& out) {
  switch (t->kind) {
    case TermKind::Symbol:
      out += 's';
      out += t->name;
      break;
    case TermKind::Wildcard:
      out += 'w';
      out += static_cast<char>('0' + static_cast<int>(t->wkind));
      out += t->name;
      if (!t->class_tag.empty()) {
        out += ':';
        out += t->class_tag;
      }
      break;
    case TermKind::Application:
      out += 'a';
      out += t->sig->name;
      out += '(';
      for (const auto& a : t->args) {
        term_key_into(a, out);
        out += ',';
      }
      out += ')';
      break;
  }
}

inline std::string term_key(const TermPtr& t) {
  std::string out;
  term_key_into(t, out);
  return out;
}

inline std::string substitution_key(const Substitution& s) {
  std::string out;
  for (const auto& [name, b] : s.bindings()) {
    out += name;
    out += b.is_sequence ? '*' : '=';
    for (const auto& t : b.terms) {
      term_key_into(t, out);
      out += ',';
    }
    out += ';';
  }
  return out;
}

}  // namespace termmatch
