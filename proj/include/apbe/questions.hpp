#pragma once

// Significant-questions framework: a finite hypothesis space, a set of
// questions with deterministic answers per hypothesis, and a belief over the
// hypotheses. Provides entropy bookkeeping, the greedy information-gain plan
// and an exhaustive minimax oracle for tiny instances.
//
// All logarithms are base 2 (bits).

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "apbe/errors.hpp"

namespace apbe::questions {

inline constexpr double kSumTolerance = 1e-9;
// An answer distribution whose entropy is below this carries no information.
inline constexpr double kTerminationTolerance = 1e-9;
// Entropies within this distance are treated as equal when breaking ties.
inline constexpr double kTieTolerance = 1e-12;

inline void validateDistribution(std::span<const double> dist) {
  if (dist.empty()) throw InvalidDistribution("empty distribution");
  double sum = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0)) throw InvalidDistribution("negative or NaN probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance)
    throw InvalidDistribution("probabilities sum to " + std::to_string(sum));
}

// -sum p log2 p with 0 log 0 = 0.
inline double entropy(std::span<const double> dist) {
  validateDistribution(dist);
  double h = 0.0;
  for (double p : dist)
    if (p > 0.0) h -= p * std::log2(p);
  return h < 0.0 ? 0.0 : h;
}

class QuestionInstance {
 public:
  // answers[h][q] is the answer hypothesis h gives to question q.
  QuestionInstance(std::size_t answer_count,
                   std::vector<std::vector<std::size_t>> answers,
                   std::vector<double> prior)
      : answer_count_(answer_count), prior_(std::move(prior)) {
    if (answers.empty()) throw InvalidArgument("instance needs at least one hypothesis");
    if (answer_count_ == 0) throw InvalidArgument("instance needs at least one answer");
    question_count_ = answers.front().size();
    if (question_count_ == 0) throw InvalidArgument("instance needs at least one question");
    if (prior_.size() != answers.size())
      throw InvalidArgument("prior size does not match hypothesis count");
    validateDistribution(prior_);
    table_.reserve(answers.size() * question_count_);
    for (const auto& row : answers) {
      if (row.size() != question_count_)
        throw InvalidArgument("answer table is not total");
      for (std::size_t a : row) {
        if (a >= answer_count_) throw InvalidArgument("answer id out of range");
        table_.push_back(a);
      }
    }
  }

  static QuestionInstance uniform(std::size_t answer_count,
                                  std::vector<std::vector<std::size_t>> answers) {
    std::vector<double> prior(answers.size(),
                              answers.empty() ? 0.0 : 1.0 / static_cast<double>(answers.size()));
    return QuestionInstance(answer_count, std::move(answers), std::move(prior));
  }

  std::size_t hypothesisCount() const { return prior_.size(); }
  std::size_t questionCount() const { return question_count_; }
  std::size_t answerCount() const { return answer_count_; }
  const std::vector<double>& prior() const { return prior_; }

  std::size_t answerOf(std::size_t hypothesis, std::size_t question) const {
    return table_[hypothesis * question_count_ + question];
  }

  void requireQuestion(std::size_t q) const {
    if (q >= question_count_) throw NotFound("unknown question q" + std::to_string(q));
  }

 private:
  std::size_t answer_count_;
  std::size_t question_count_ = 0;
  std::vector<double> prior_;
  std::vector<std::size_t> table_;
};

// Probability of each hypothesis given the evidence gathered so far.
struct Belief {
  std::vector<double> weights;

  static Belief fromPrior(const QuestionInstance& inst) { return Belief{inst.prior()}; }

  std::size_t support() const {
    std::size_t n = 0;
    for (double w : weights) n += w > 0.0 ? 1 : 0;
    return n;
  }
};

inline void checkBelief(const QuestionInstance& inst, const Belief& belief) {
  if (belief.weights.size() != inst.hypothesisCount())
    throw InvalidArgument("belief size does not match hypothesis count");
  validateDistribution(belief.weights);
}

// Pr(q = a) = sum of belief weights of hypotheses answering a.
inline std::vector<double> answerDistribution(const QuestionInstance& inst, const Belief& belief,
                                              std::size_t q) {
  inst.requireQuestion(q);
  checkBelief(inst, belief);
  std::vector<double> dist(inst.answerCount(), 0.0);
  for (std::size_t h = 0; h < inst.hypothesisCount(); ++h)
    dist[inst.answerOf(h, q)] += belief.weights[h];
  return dist;
}

// Belief after observing answer a to q; nullopt when no hypothesis with
// positive weight gives that answer.
inline std::optional<Belief> condition(const QuestionInstance& inst, const Belief& belief,
                                       std::size_t q, std::size_t a) {
  inst.requireQuestion(q);
  Belief out{std::vector<double>(belief.weights.size(), 0.0)};
  double mass = 0.0;
  for (std::size_t h = 0; h < inst.hypothesisCount(); ++h) {
    if (inst.answerOf(h, q) == a) {
      out.weights[h] = belief.weights[h];
      mass += belief.weights[h];
    }
  }
  if (mass <= 0.0) return std::nullopt;
  for (double& w : out.weights) w /= mass;
  return out;
}

// Expected entropy of the belief after asking q, computed directly as
// sum_a Pr(q=a) * H(belief | q=a).
inline double conditionalEntropy(const QuestionInstance& inst, const Belief& belief,
                                 std::size_t q) {
  const auto dist = answerDistribution(inst, belief, q);
  double h = 0.0;
  for (std::size_t a = 0; a < dist.size(); ++a) {
    if (dist[a] <= 0.0) continue;
    auto post = condition(inst, belief, q, a);
    h += dist[a] * entropy(post->weights);
  }
  return h;
}

// Index of the maximum-entropy question; ties go to the lowest index.
// Returns nullopt when every question is uninformative.
inline std::optional<std::size_t> greedyNextQuestion(const QuestionInstance& inst,
                                                     const Belief& belief) {
  checkBelief(inst, belief);
  std::vector<double> h(inst.questionCount());
  double best = -1.0;
  for (std::size_t q = 0; q < inst.questionCount(); ++q) {
    h[q] = entropy(answerDistribution(inst, belief, q));
    best = std::max(best, h[q]);
  }
  if (best < kTerminationTolerance) return std::nullopt;
  for (std::size_t q = 0; q < h.size(); ++q)
    if (h[q] >= best - kTieTolerance) return q;
  return std::nullopt;
}

// A plan tree. Leaves are terminal; inner nodes ask a question and branch on
// every answer that still has positive probability.
struct PlanNode {
  Belief belief;
  std::optional<std::size_t> question;
  std::vector<std::pair<std::size_t, PlanNode>> children;  // (answer, subtree)

  bool terminal() const { return !question.has_value(); }

  std::size_t depth() const {
    std::size_t d = 0;
    for (const auto& [answer, child] : children) d = std::max(d, child.depth() + 1);
    return d;
  }

  // Calls fn(leaf) for every leaf, i.e. every maximal feasible question path.
  template <typename Fn>
  void forEachLeaf(Fn&& fn) const {
    if (terminal()) {
      fn(*this);
      return;
    }
    for (const auto& [answer, child] : children) child.forEachLeaf(fn);
  }
};

namespace detail {

inline PlanNode expandPlan(const QuestionInstance& inst, Belief belief, std::size_t depth,
                           std::size_t bound) {
  if (depth > bound) throw NonTermination("greedy plan exceeded depth bound");
  PlanNode node{std::move(belief), std::nullopt, {}};
  node.question = greedyNextQuestion(inst, node.belief);
  if (!node.question) return node;
  const std::size_t q = *node.question;
  for (std::size_t a = 0; a < inst.answerCount(); ++a) {
    if (auto post = condition(inst, node.belief, q, a))
      node.children.emplace_back(a, expandPlan(inst, std::move(*post), depth + 1, bound));
  }
  return node;
}

}  // namespace detail

inline PlanNode buildGreedyPlan(const QuestionInstance& inst) {
  const std::size_t bound = inst.questionCount() * inst.hypothesisCount();
  return detail::expandPlan(inst, Belief::fromPrior(inst), 0, bound);
}

inline constexpr std::size_t kBruteForceLimit = 13;

// Exact minimax depth over all terminating plans that identify the hypothesis
// among those with positive prior. nullopt when some pair of such hypotheses
// cannot be separated by any question.
inline std::optional<std::size_t> bruteForceOptimalDepth(const QuestionInstance& inst) {
  if (inst.hypothesisCount() > kBruteForceLimit || inst.questionCount() > kBruteForceLimit)
    throw SizeLimit("brute-force planning is limited to " + std::to_string(kBruteForceLimit) + " hypotheses and questions");

  constexpr std::size_t kUnsolvable = std::numeric_limits<std::size_t>::max();
  std::unordered_map<std::uint32_t, std::size_t> memo;

  auto solve = [&](auto&& self, std::uint32_t set) -> std::size_t {
    if (std::popcount(set) <= 1) return 0;
    if (auto it = memo.find(set); it != memo.end()) return it->second;
    std::size_t best = kUnsolvable;
    for (std::size_t q = 0; q < inst.questionCount(); ++q) {
      std::map<std::size_t, std::uint32_t> parts;
      for (std::size_t h = 0; h < inst.hypothesisCount(); ++h)
        if (set & (1u << h)) parts[inst.answerOf(h, q)] |= 1u << h;
      if (parts.size() < 2) continue;
      std::size_t worst = 0;
      for (const auto& [answer, part] : parts) {
        worst = std::max(worst, self(self, part));
        if (worst == kUnsolvable) break;
      }
      if (worst != kUnsolvable) best = std::min(best, worst + 1);
    }
    memo.emplace(set, best);
    return best;
  };

  std::uint32_t all = 0;
  for (std::size_t h = 0; h < inst.hypothesisCount(); ++h)
    if (inst.prior()[h] > 0.0) all |= 1u << h;
  const std::size_t d = solve(solve, all);
  if (d == kUnsolvable) return std::nullopt;
  return d;
}

// Inserting an unknown value into a sorted list of n elements: hypotheses are
// the insertion positions 0..n and question q_i asks whether position <= i.
// Answer 1 is "true", 0 is "false".
inline QuestionInstance binarySearchInstance(int n, std::optional<std::vector<double>> prior = {}) {
  if (n < 1) throw InvalidArgument("binary search instance needs n >= 1");
  const auto size = static_cast<std::size_t>(n) + 1;
  std::vector<std::vector<std::size_t>> answers(size, std::vector<std::size_t>(size));
  for (std::size_t a = 0; a < size; ++a)
    for (std::size_t i = 0; i < size; ++i) answers[a][i] = a <= i ? 1 : 0;
  if (prior) return QuestionInstance(2, std::move(answers), std::move(*prior));
  return QuestionInstance::uniform(2, std::move(answers));
}

}  // namespace apbe::questions
