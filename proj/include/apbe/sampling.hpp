#pragma once

// Sampling learner: turns a version space into a belief state made of the
// top-ranked programs plus programs drawn by structural random sampling,
// weighted linearly by rank position.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "apbe/dsl.hpp"
#include "apbe/errors.hpp"
#include "apbe/version_space.hpp"

namespace apbe::sampling {

struct SamplingSpec {
  std::size_t top = 10;
  std::size_t random = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (top + random == 0) throw InvalidArgument("sampling spec draws no programs");
  }
};

struct RandomDraw {
  // Concatenation of every root alternative's draw, before the final
  // uniform selection.
  std::vector<dsl::Program> pool;
  std::vector<dsl::Program> samples;
};

namespace detail {

using Pieces = std::vector<dsl::Atom>;

class StructuralSampler {
 public:
  StructuralSampler(const synthesis::VersionSpace& vs, std::size_t k, std::uint64_t seed)
      : vs_(vs), k_(k), rng_(seed), memo_(vs.nodes().size()) {}

  // k draws from the programs rooted at `id`. A node is a union over its
  // alternatives (one per edge constant and per substring block): k draws are
  // taken from each alternative and k are picked uniformly from the pool.
  // Within an alternative, k atoms and k completions are drawn independently
  // and paired component-wise, then k of those are picked uniformly.
  const std::vector<Pieces>& draw(std::size_t id, std::vector<Pieces>* pool_out = nullptr) {
    if (memo_[id] && !pool_out) return *memo_[id];
    if (id == vs_.sink()) {
      memo_[id] = std::vector<Pieces>(k_);
      return *memo_[id];
    }
    std::vector<Pieces> pool;
    for (const auto& edge : vs_.node(id).edges) {
      const auto& rests = draw(edge.to);
      if (edge.constant) {
        std::vector<Pieces> combined;
        for (std::size_t i = 0; i < k_; ++i) combined.push_back(prepend(dsl::ConstStr{*edge.constant}, rests[i]));
        appendUniform(pool, combined);
      }
      for (const auto& block : edge.blocks) {
        std::vector<Pieces> combined;
        for (std::size_t i = 0; i < k_; ++i) {
          const auto& s = block.starts[pick(block.starts.size())];
          const auto& e = block.ends[pick(block.ends.size())];
          combined.push_back(prepend(dsl::SubStr{s, e}, rests[i]));
        }
        appendUniform(pool, combined);
      }
    }
    std::vector<Pieces> chosen;
    appendUniform(chosen, pool);
    if (pool_out) *pool_out = std::move(pool);
    memo_[id] = std::move(chosen);
    return *memo_[id];
  }

 private:
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  static Pieces prepend(dsl::Atom head, const Pieces& rest) {
    Pieces out;
    out.reserve(rest.size() + 1);
    out.push_back(std::move(head));
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
  }

  // k uniform draws with replacement from `from`.
  void appendUniform(std::vector<Pieces>& to, const std::vector<Pieces>& from) {
    for (std::size_t i = 0; i < k_; ++i) to.push_back(from[pick(from.size())]);
  }

  const synthesis::VersionSpace& vs_;
  std::size_t k_;
  std::mt19937_64 rng_;
  std::vector<std::optional<std::vector<Pieces>>> memo_;
};

}  // namespace detail

inline RandomDraw randomKDetailed(const synthesis::VersionSpace& vs, std::size_t k, std::uint64_t seed) {
  if (vs.empty()) throw EmptySpace("cannot sample from an empty version space");
  if (k == 0) throw InvalidArgument("randomK needs k >= 1");
  detail::StructuralSampler sampler(vs, k, seed);
  std::vector<detail::Pieces> pool;
  const auto& chosen = sampler.draw(vs.root(), &pool);
  RandomDraw out;
  for (auto& p : pool) out.pool.push_back(dsl::Program{std::move(p)});
  for (const auto& p : chosen) out.samples.push_back(dsl::Program{p});
  return out;
}

// k random programs (with possible repeats), deterministic in seed.
inline std::vector<dsl::Program> randomK(const synthesis::VersionSpace& vs, std::size_t k,
                                         std::uint64_t seed) {
  return randomKDetailed(vs, k, seed).samples;
}

struct BeliefEntry {
  dsl::Program program;
  double prob = 0.0;
};

// Finite weighted sample standing in for the distribution over programs.
// Entries are distinct and sorted best-ranked first.
struct BeliefState {
  std::vector<BeliefEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  const dsl::Program& best() const { return entries.front().program; }
};

// Linear rank weights: position j of m (1-based) gets (m - j + 1) / (m(m+1)/2).
inline std::vector<double> rankWeights(std::size_t m) {
  std::vector<double> w(m);
  const double total = static_cast<double>(m) * static_cast<double>(m + 1) / 2.0;
  for (std::size_t j = 0; j < m; ++j) w[j] = static_cast<double>(m - j) / total;
  return w;
}

// Deduplicates, ranks and weights a set of programs.
inline BeliefState makeBelief(std::vector<dsl::Program> programs) {
  std::sort(programs.begin(), programs.end(), dsl::rankedBefore);
  programs.erase(std::unique(programs.begin(), programs.end()), programs.end());
  BeliefState belief;
  const auto w = rankWeights(programs.size());
  for (std::size_t j = 0; j < programs.size(); ++j)
    belief.entries.push_back({std::move(programs[j]), w[j]});
  return belief;
}

inline BeliefState sample(const synthesis::VersionSpace& vs, const SamplingSpec& spec) {
  spec.validate();
  if (vs.empty()) throw EmptySpace("cannot sample from an empty version space");
  std::vector<dsl::Program> programs;
  if (spec.top > 0) programs = synthesis::topK(vs, spec.top);
  if (spec.random > 0) {
    auto drawn = randomK(vs, spec.random, spec.seed);
    programs.insert(programs.end(), std::make_move_iterator(drawn.begin()),
                    std::make_move_iterator(drawn.end()));
  }
  return makeBelief(std::move(programs));
}

}  // namespace apbe::sampling
