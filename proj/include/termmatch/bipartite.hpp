#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <queue>
#include <utility>
#include <vector>

#include "termmatch/term.hpp"

namespace termmatch {

// Bipartite graph between subject subterms (left) and pattern subterms
// (right); node indices double as the position under the total term order.
// Each edge carries the candidate substitutions of that pairing.
struct MatchGraph {
  std::size_t left_count = 0;
  std::size_t right_count = 0;
  std::vector<int> left_group;  // structural-equality class per left node
  std::vector<std::vector<int>> adjacency;  // left -> sorted right neighbours
  std::map<std::pair<int, int>, std::vector<Substitution>> labels;

  void resize(std::size_t left, std::size_t right) {
    left_count = left;
    right_count = right;
    left_group.assign(left, 0);
    adjacency.assign(left, {});
  }

  void add_edge(int l, int r, std::vector<Substitution> subs) {
    auto& adj = adjacency[static_cast<std::size_t>(l)];
    adj.insert(std::lower_bound(adj.begin(), adj.end(), r), r);
    labels[{l, r}] = std::move(subs);
  }

  bool has_edge(int l, int r) const {
    const auto& adj = adjacency[static_cast<std::size_t>(l)];
    return std::binary_search(adj.begin(), adj.end(), r);
  }
};

struct Matching {
  std::vector<std::pair<int, int>> pairs;  // (left, right), sorted by left

  std::size_t size() const { return pairs.size(); }
  friend bool operator<(const Matching& a, const Matching& b) { return a.pairs < b.pairs; }
  friend bool operator==(const Matching& a, const Matching& b) { return a.pairs == b.pairs; }
};

namespace detail {

// Hopcroft-Karp on an adjacency-list bipartite graph; O(E sqrt(V)).
class HopcroftKarp {
 public:
  HopcroftKarp(const std::vector<std::vector<int>>& adj, std::size_t right_count)
      : adj_(adj),
        match_left_(adj.size(), -1),
        match_right_(right_count, -1),
        dist_(adj.size()) {}

  int run() {
    int matching = 0;
    while (bfs()) {
      for (std::size_t u = 0; u < adj_.size(); ++u)
        if (match_left_[u] < 0 && dfs(static_cast<int>(u))) ++matching;
    }
    return matching;
  }

  const std::vector<int>& match_left() const { return match_left_; }

 private:
  static constexpr int kInf = 1 << 30;

  bool bfs() {
    std::queue<int> q;
    for (std::size_t u = 0; u < adj_.size(); ++u) {
      if (match_left_[u] < 0) {
        dist_[u] = 0;
        q.push(static_cast<int>(u));
      } else {
        dist_[u] = kInf;
      }
    }
    bool found = false;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : adj_[static_cast<std::size_t>(u)]) {
        int w = match_right_[static_cast<std::size_t>(v)];
        if (w < 0) {
          found = true;
        } else if (dist_[static_cast<std::size_t>(w)] == kInf) {
          dist_[static_cast<std::size_t>(w)] = dist_[static_cast<std::size_t>(u)] + 1;
          q.push(w);
        }
      }
    }
    return found;
  }

  bool dfs(int u) {
    for (int v : adj_[static_cast<std::size_t>(u)]) {
      int w = match_right_[static_cast<std::size_t>(v)];
      if (w < 0 || (dist_[static_cast<std::size_t>(w)] == dist_[static_cast<std::size_t>(u)] + 1 &&
                    dfs(w))) {
        match_left_[static_cast<std::size_t>(u)] = v;
        match_right_[static_cast<std::size_t>(v)] = u;
        return true;
      }
    }
    dist_[static_cast<std::size_t>(u)] = kInf;
    return false;
  }

  const std::vector<std::vector<int>>& adj_;
  std::vector<int> match_left_, match_right_;
  std::vector<int> dist_;
};

inline int maximum_matching_size(const std::vector<std::vector<int>>& adj,
                                 std::size_t right_count) {
  HopcroftKarp hk(adj, right_count);
  return hk.run();
}

}  // namespace detail

// Maximum-cardinality matching; pairs sorted by left node.
inline Matching hopcroft_karp(const MatchGraph& g) {
  detail::HopcroftKarp hk(g.adjacency, g.right_count);
  hk.run();
  Matching m;
  for (std::size_t u = 0; u < g.left_count; ++u)
    if (hk.match_left()[u] >= 0) m.pairs.emplace_back(static_cast<int>(u), hk.match_left()[u]);
  return m;
}

// Enumerates every maximum-cardinality matching exactly once. Left nodes are
// decided in order; branches that cannot reach the maximum cardinality are
// pruned with a Hopcroft-Karp bound on the remaining subgraph.
template <typename Sink>
bool enumerate_maximum_matchings(const MatchGraph& g, Sink&& sink) {
  const int target = detail::maximum_matching_size(g.adjacency, g.right_count);
  if (target == 0) {
    Matching empty;
    return sink(empty);
  }
  std::vector<char> right_used(g.right_count, 0);
  Matching current;

  // maximum matching size achievable among left nodes >= from, avoiding used right nodes
  auto bound = [&](std::size_t from) {
    std::vector<std::vector<int>> adj;
    adj.reserve(g.left_count - from);
    for (std::size_t u = from; u < g.left_count; ++u) {
      std::vector<int> row;
      for (int v : g.adjacency[u])
        if (!right_used[static_cast<std::size_t>(v)]) row.push_back(v);
      adj.push_back(std::move(row));
    }
    return detail::maximum_matching_size(adj, g.right_count);
  };

  std::function<bool(std::size_t)> rec = [&](std::size_t u) -> bool {
    if (static_cast<int>(current.size()) + bound(u) < target) return true;  // prune
    if (u == g.left_count) return sink(current);
    for (int v : g.adjacency[u]) {
      if (right_used[static_cast<std::size_t>(v)]) continue;
      right_used[static_cast<std::size_t>(v)] = 1;
      current.pairs.emplace_back(static_cast<int>(u), v);
      bool go = rec(u + 1);
      current.pairs.pop_back();
      right_used[static_cast<std::size_t>(v)] = 0;
      if (!go) return false;
    }
    return rec(u + 1);  // leave u unmatched
  };
  return rec(0);
}

inline std::vector<Matching> all_maximum_matchings(const MatchGraph& g) {
  std::vector<Matching> out;
  enumerate_maximum_matchings(g, [&](const Matching& m) {
    out.push_back(m);
    return true;
  });
  return out;
}

// Order filter: for edges (s, p), (s', p') with structurally equal subjects,
// p > p' must imply s > s'. Matchings with "crossing" edges on equal subjects
// are redundant permutations and get discarded.
inline bool is_order_preserving(const Matching& m, const MatchGraph& g) {
  for (std::size_t i = 0; i < m.pairs.size(); ++i) {
    for (std::size_t j = i + 1; j < m.pairs.size(); ++j) {
      auto [s1, p1] = m.pairs[i];
      auto [s2, p2] = m.pairs[j];
      if (g.left_group[static_cast<std::size_t>(s1)] != g.left_group[static_cast<std::size_t>(s2)])
        continue;
      if ((p1 > p2 && s1 < s2) || (p2 > p1 && s2 < s1)) return false;
    }
  }
  return true;
}

// Cartesian product over the matched edges' candidate substitutions, folded
// with merge; only fully compatible combinations are emitted.
template <typename Sink>
bool combine_edge_substitutions(const Matching& m, const MatchGraph& g, const Substitution& prior,
                                Sink&& sink) {
  std::function<bool(std::size_t, const Substitution&)> rec =
      [&](std::size_t i, const Substitution& acc) -> bool {
    if (i == m.pairs.size()) return sink(acc);
    auto it = g.labels.find(m.pairs[i]);
    if (it == g.labels.end()) return true;
    for (const auto& sub : it->second) {
      if (auto merged_sub = merge(acc, sub)) {
        if (!rec(i + 1, *merged_sub)) return false;
      }
    }
    return true;
  };
  return rec(0, prior);
}

}  // namespace termmatch
