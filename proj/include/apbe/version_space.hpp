#pragma once

// Passive learner. A version space is a DAG whose paths from root to sink
// spell the pieces of a program; each edge carries every atom that produces
// the corresponding output segment on every example. Substring atoms are
// stored factored as (start positions) x (end positions) blocks, one block
// per tuple of input occurrences of the segment.

#include <algorithm>
#include <cstddef>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "apbe/dsl.hpp"
#include "apbe/errors.hpp"

namespace apbe::synthesis {

using BigCount = boost::multiprecision::cpp_int;

struct Example {
  std::string input;
  std::string output;
  friend bool operator==(const Example&, const Example&) = default;
};

// Every position expression within grammar bounds that resolves to index i
// of s, indexed by i (size |s| + 1). Each list is sorted.
inline std::vector<std::vector<dsl::Pos>> positionTable(std::string_view s) {
  const int len = static_cast<int>(s.size());
  std::vector<std::vector<dsl::Pos>> table(s.size() + 1);
  for (int i = 0; i <= len; ++i) {
    if (i <= dsl::kMaxAbsOffset) table[i].push_back(dsl::AbsPos{i});
    if (const int k = i - len - 1; k >= -dsl::kMaxAbsOffset) table[i].push_back(dsl::AbsPos{k});
  }
  std::vector<dsl::TokenClass> tokens;
  for (auto kind : dsl::kRunKinds) tokens.push_back(dsl::TokenClass::run(kind));
  std::vector<char> literals;
  for (char c : s)
    if (dsl::isLiteralChar(c)) literals.push_back(c);
  std::sort(literals.begin(), literals.end());
  literals.erase(std::unique(literals.begin(), literals.end()), literals.end());
  for (char c : literals) tokens.push_back(dsl::TokenClass::lit(c));

  for (const auto& token : tokens) {
    const auto matches = dsl::tokenMatches(token, s);
    const int count = static_cast<int>(matches.size());
    for (int j = 0; j < count; ++j) {
      std::vector<int> occs;
      if (j + 1 <= dsl::kMaxOccurrence) occs.push_back(j + 1);
      if (count - j <= dsl::kMaxOccurrence) occs.push_back(j - count);
      for (int occ : occs) {
        table[matches[j].first].push_back(dsl::TokPos{token, occ, dsl::Side::Start});
        table[matches[j].second].push_back(dsl::TokPos{token, occ, dsl::Side::End});
      }
    }
  }
  for (auto& list : table) std::sort(list.begin(), list.end());
  return table;
}

// All substring atoms start x end.
struct SubStrBlock {
  std::vector<dsl::Pos> starts;
  std::vector<dsl::Pos> ends;

  std::size_t size() const { return starts.size() * ends.size(); }
};

struct Edge {
  std::size_t to = 0;
  std::optional<std::string> constant;
  std::vector<SubStrBlock> blocks;

  std::size_t atomCount() const {
    std::size_t n = constant ? 1 : 0;
    for (const auto& b : blocks) n += b.size();
    return n;
  }

  // Materialized atoms; blocks are disjoint so there are no duplicates.
  std::vector<dsl::Atom> atoms() const {
    std::vector<dsl::Atom> out;
    out.reserve(atomCount());
    if (constant) out.emplace_back(dsl::ConstStr{*constant});
    for (const auto& b : blocks)
      for (const auto& s : b.starts)
        for (const auto& e : b.ends) out.emplace_back(dsl::SubStr{s, e});
    return out;
  }
};

struct Node {
  std::vector<Edge> edges;
};

class VersionSpace {
 public:
  VersionSpace() = default;

  // Takes a raw DAG, prunes everything that cannot reach the sink and
  // renumbers nodes so that the root is 0.
  VersionSpace(std::vector<Node> nodes, std::size_t root, std::size_t sink) {
    build(std::move(nodes), root, sink);
  }

  bool empty() const { return nodes_.empty(); }
  std::size_t root() const { return 0; }
  std::size_t sink() const { return sink_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(std::size_t id) const { return nodes_.at(id); }

  const BigCount& count() const {
    static const BigCount zero = 0;
    return empty() ? zero : counts_[0];
  }
  const BigCount& countFrom(std::size_t id) const { return counts_.at(id); }

  // Visits every denoted program. Intended for small spaces only.
  template <typename Fn>
  void forEachProgram(Fn&& fn) const {
    if (empty()) return;
    std::vector<dsl::Atom> prefix;
    visit(0, prefix, fn);
  }

  std::vector<dsl::Program> enumerate() const {
    std::vector<dsl::Program> out;
    forEachProgram([&](const dsl::Program& p) { out.push_back(p); });
    return out;
  }

 private:
  template <typename Fn>
  void visit(std::size_t id, std::vector<dsl::Atom>& prefix, Fn& fn) const {
    if (id == sink_) {
      fn(dsl::Program{prefix});
      return;
    }
    for (const auto& edge : nodes_[id].edges) {
      for (const auto& atom : edge.atoms()) {
        prefix.push_back(atom);
        visit(edge.to, prefix, fn);
        prefix.pop_back();
      }
    }
  }

  void build(std::vector<Node> nodes, std::size_t root, std::size_t sink) {
    if (root == sink || nodes.empty()) return;
    const std::size_t n = nodes.size();
    // Drop empty edges, then find nodes that can reach the sink.
    for (auto& node : nodes)
      std::erase_if(node.edges, [](const Edge& e) { return e.atomCount() == 0; });
    std::vector<int> live(n, -1);  // -1 unknown, 0 dead, 1 live
    auto reaches = [&](auto&& self, std::size_t id) -> bool {
      if (id == sink) return true;
      if (live[id] >= 0) return live[id] == 1;
      bool any = false;
      for (const auto& e : nodes[id].edges) any = self(self, e.to) || any;
      live[id] = any ? 1 : 0;
      return any;
    };
    if (!reaches(reaches, root)) return;
    live[sink] = 1;

    // Renumber reachable live nodes in DFS preorder from the root.
    std::vector<std::size_t> remap(n, n);
    std::vector<std::size_t> order;
    auto number = [&](auto&& self, std::size_t id) -> void {
      if (remap[id] != n) return;
      remap[id] = order.size();
      order.push_back(id);
      for (const auto& e : nodes[id].edges)
        if (live[e.to] == 1) self(self, e.to);
    };
    number(number, root);

    nodes_.resize(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      for (auto& e : nodes[order[i]].edges) {
        if (live[e.to] != 1) continue;
        e.to = remap[e.to];
        nodes_[i].edges.push_back(std::move(e));
      }
    }
    sink_ = remap[sink];

    counts_.assign(nodes_.size(), BigCount(-1));
    counts_[sink_] = 1;
    auto count = [&](auto&& self, std::size_t id) -> const BigCount& {
      if (counts_[id] >= 0) return counts_[id];
      BigCount total = 0;
      for (const auto& e : nodes_[id].edges) total += self(self, e.to) * e.atomCount();
      counts_[id] = std::move(total);
      return counts_[id];
    };
    count(count, 0);
  }

  std::vector<Node> nodes_;
  std::size_t sink_ = 0;
  std::vector<BigCount> counts_;
};

// Version space for one example. Node i stands for output prefix length i.
inline VersionSpace learnExample(const Example& ex) {
  const std::string_view in = ex.input;
  const std::string_view out = ex.output;
  const std::size_t len = out.size();
  if (len == 0) return {};
  const auto positions = positionTable(in);
  std::vector<Node> nodes(len + 1);
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t j = i + 1; j <= len; ++j) {
      Edge edge;
      edge.to = j;
      const auto segment = out.substr(i, j - i);
      edge.constant = std::string(segment);
      for (std::size_t at = in.find(segment); at != std::string_view::npos;
           at = in.find(segment, at + 1)) {
        const auto& starts = positions[at];
        const auto& ends = positions[at + segment.size()];
        if (!starts.empty() && !ends.empty()) edge.blocks.push_back({starts, ends});
      }
      nodes[i].edges.push_back(std::move(edge));
    }
  }
  return VersionSpace(std::move(nodes), 0, len);
}

namespace detail {

inline std::vector<dsl::Pos> intersectSorted(const std::vector<dsl::Pos>& a,
                                             const std::vector<dsl::Pos>& b) {
  std::vector<dsl::Pos> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline Edge intersectEdges(const Edge& a, const Edge& b) {
  Edge out;
  if (a.constant && b.constant && *a.constant == *b.constant) out.constant = a.constant;
  for (const auto& x : a.blocks) {
    for (const auto& y : b.blocks) {
      auto starts = intersectSorted(x.starts, y.starts);
      if (starts.empty()) continue;
      auto ends = intersectSorted(x.ends, y.ends);
      if (ends.empty()) continue;
      out.blocks.push_back({std::move(starts), std::move(ends)});
    }
  }
  return out;
}

}  // namespace detail

// Programs denoted by both spaces.
inline VersionSpace intersect(const VersionSpace& a, const VersionSpace& b) {
  if (a.empty() || b.empty()) return {};
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> ids;
  std::vector<std::pair<std::size_t, std::size_t>> pending;
  std::vector<Node> nodes;
  auto idOf = [&](std::size_t x, std::size_t y) {
    auto [it, inserted] = ids.try_emplace({x, y}, nodes.size());
    if (inserted) {
      nodes.emplace_back();
      pending.emplace_back(x, y);
    }
    return it->second;
  };
  idOf(a.root(), b.root());
  for (std::size_t next = 0; next < pending.size(); ++next) {
    const auto [x, y] = pending[next];
    const std::size_t id = next;
    if (x == a.sink() || y == b.sink()) continue;
    for (const auto& ea : a.node(x).edges) {
      for (const auto& eb : b.node(y).edges) {
        Edge e = detail::intersectEdges(ea, eb);
        if (e.atomCount() == 0) continue;
        e.to = idOf(ea.to, eb.to);
        nodes[id].edges.push_back(std::move(e));
      }
    }
  }
  const auto sink = ids.find({a.sink(), b.sink()});
  if (sink == ids.end()) return {};
  return VersionSpace(std::move(nodes), 0, sink->second);
}

// Duplicate examples collapse; the same input with two outputs throws.
inline std::vector<Example> normalizeExamples(const std::vector<Example>& examples) {
  std::vector<Example> out;
  std::unordered_map<std::string, std::string> seen;
  for (const auto& ex : examples) {
    auto [it, inserted] = seen.emplace(ex.input, ex.output);
    if (!inserted) {
      if (it->second != ex.output)
        throw Contradiction("input " + dsl::json(ex.input).dump() + " has two different outputs");
      continue;
    }
    out.push_back(ex);
  }
  return out;
}

// All bounded-grammar programs consistent with every example. An empty
// result means the DSL cannot express the examples; conflicting examples
// throw Contradiction instead.
inline VersionSpace learn(const std::vector<Example>& examples) {
  if (examples.empty()) throw InvalidArgument("learn needs at least one example");
  const auto exs = normalizeExamples(examples);
  VersionSpace vs = learnExample(exs.front());
  for (std::size_t i = 1; i < exs.size() && !vs.empty(); ++i) vs = intersect(vs, learnExample(exs[i]));
  return vs;
}

inline const BigCount& countPrograms(const VersionSpace& vs) { return vs.count(); }

namespace detail {

struct Ranked {
  int score = 0;
  std::vector<dsl::Atom> pieces;
  std::vector<std::string> keys;
};

inline bool rankedLess(const Ranked& a, const Ranked& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.keys < b.keys;
}

}  // namespace detail

// The k best programs under dsl::rankedBefore, best first. Computed by a
// k-best dynamic program over the DAG: the best k completions of a node are
// among (best k atoms of an edge) x (best k completions of its target).
inline std::vector<dsl::Program> topK(const VersionSpace& vs, std::size_t k) {
  if (k == 0) throw InvalidArgument("topK needs k >= 1");
  if (vs.empty()) return {};
  using detail::Ranked;
  std::vector<std::optional<std::vector<Ranked>>> memo(vs.nodes().size());
  memo[vs.sink()] = std::vector<Ranked>{Ranked{}};

  auto best = [&](auto&& self, std::size_t id) -> const std::vector<Ranked>& {
    if (memo[id]) return *memo[id];
    std::vector<Ranked> candidates;
    for (const auto& edge : vs.node(id).edges) {
      std::vector<Ranked> atoms;
      for (auto& atom : edge.atoms()) {
        Ranked r;
        r.score = dsl::atomScoreTenths(atom);
        r.keys.push_back(dsl::sortKey(atom));
        r.pieces.push_back(std::move(atom));
        atoms.push_back(std::move(r));
      }
      const std::size_t keep = std::min(k, atoms.size());
      std::partial_sort(atoms.begin(), atoms.begin() + keep, atoms.end(), detail::rankedLess);
      atoms.resize(keep);
      const auto& rests = self(self, edge.to);
      for (const auto& head : atoms) {
        for (const auto& rest : rests) {
          Ranked r = head;
          r.score += rest.score;
          r.pieces.insert(r.pieces.end(), rest.pieces.begin(), rest.pieces.end());
          r.keys.insert(r.keys.end(), rest.keys.begin(), rest.keys.end());
          candidates.push_back(std::move(r));
        }
      }
    }
    const std::size_t keep = std::min(k, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end(),
                      detail::rankedLess);
    candidates.resize(keep);
    memo[id] = std::move(candidates);
    return *memo[id];
  };

  std::vector<dsl::Program> out;
  for (const auto& r : best(best, vs.root())) out.push_back(dsl::Program{r.pieces});
  return out;
}

}  // namespace apbe::synthesis
