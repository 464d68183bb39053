#pragma once

// Active program learner. Each round the belief state (a weighted sample of
// consistent programs) is used to score candidate inputs by the entropy of
// their predicted output; the most uncertain input is put to the oracle.
// Null outputs count as pairwise distinct outcomes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "apbe/clustering.hpp"
#include "apbe/dsl.hpp"
#include "apbe/errors.hpp"
#include "apbe/questions.hpp"
#include "apbe/sampling.hpp"
#include "apbe/version_space.hpp"

namespace apbe::active {

using nlohmann::json;

enum class InputSampling { Random, InputClustering, OutputClustering, InputOutputClustering };

inline std::string_view name(InputSampling m) {
  switch (m) {
    case InputSampling::Random: return "random";
    case InputSampling::InputClustering: return "input";
    case InputSampling::OutputClustering: return "output";
    case InputSampling::InputOutputClustering: return "io";
  }
  return "?";
}

inline InputSampling parseInputSampling(std::string_view s) {
  for (auto m : {InputSampling::Random, InputSampling::InputClustering, InputSampling::OutputClustering,
                 InputSampling::InputOutputClustering})
    if (name(m) == s) return m;
  throw InvalidArgument("unknown input sampling mode " + std::string(s));
}

struct ActiveConfig {
  sampling::SamplingSpec sampling;
  InputSampling inputSampling = InputSampling::Random;
  // Sample size: the cap M for random sampling, n for the clustering modes.
  std::size_t candidates = 100;
  double epsilon = 1e-9;
  std::size_t maxIterations = 32;
  // How many top-ranked belief programs the convergence rule inspects.
  std::size_t topDistinguish = 5;
  // How many top-ranked programs output clustering keys on (1 to 3).
  std::size_t outputWitnesses = 1;

  void validate() const {
    sampling.validate();
    if (maxIterations < 1) throw InvalidArgument("maxIterations must be >= 1");
    if (topDistinguish < 2) throw InvalidArgument("topDistinguish must be >= 2");
    if (candidates < 1) throw InvalidArgument("candidates must be >= 1");
    if (outputWitnesses < 1) throw InvalidArgument("outputWitnesses must be >= 1");
    if (!(epsilon >= 0.0)) throw InvalidArgument("epsilon must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Output distributions

// Two outputs on the same input tell the programs apart. Nulls are never
// equal to anything, not even to another null.
inline bool distinguishes(const dsl::Output& a, const dsl::Output& b) {
  return a.isNull() || b.isNull() || *a.value != *b.value;
}

struct Outcome {
  dsl::Output output;
  double prob = 0.0;
};

// Probability mass per distinct output; each null occurrence is its own
// outcome. Outcomes appear in order of first occurrence.
inline std::vector<Outcome> outputDistribution(std::span<const double> probs,
                                               std::span<const dsl::Output> outputs) {
  if (probs.size() != outputs.size()) throw InvalidArgument("probs and outputs differ in size");
  std::vector<Outcome> dist;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (outputs[i].isNull()) {
      dist.push_back({outputs[i], probs[i]});
      continue;
    }
    auto [it, inserted] = index.emplace(*outputs[i].value, dist.size());
    if (inserted)
      dist.push_back({outputs[i], probs[i]});
    else
      dist[it->second].prob += probs[i];
  }
  return dist;
}

inline double outcomeEntropy(const std::vector<Outcome>& dist) {
  std::vector<double> p;
  p.reserve(dist.size());
  for (const auto& o : dist) p.push_back(o.prob);
  return questions::entropy(p);
}

inline std::vector<dsl::Output> predict(const sampling::BeliefState& belief, std::string_view input) {
  std::vector<dsl::Output> outs;
  outs.reserve(belief.size());
  for (const auto& e : belief.entries) outs.push_back(dsl::evaluate(e.program, input));
  return outs;
}

inline std::vector<double> probabilities(const sampling::BeliefState& belief) {
  std::vector<double> p;
  p.reserve(belief.size());
  for (const auto& e : belief.entries) p.push_back(e.prob);
  return p;
}

inline std::vector<Outcome> outputDistribution(const sampling::BeliefState& belief, std::string_view input) {
  const auto outs = predict(belief, input);
  const auto probs = probabilities(belief);
  return outputDistribution(probs, outs);
}

inline double inputEntropy(const sampling::BeliefState& belief, std::string_view input) {
  return outcomeEntropy(outputDistribution(belief, input));
}

// ---------------------------------------------------------------------------
// Session state

enum class Status { Running, Converged, Failed };

inline std::string_view name(Status s) {
  switch (s) {
    case Status::Running: return "running";
    case Status::Converged: return "converged";
    case Status::Failed: return "failed";
  }
  return "?";
}

enum class ExampleKind { Query, Correction };

struct CandidateScore {
  std::size_t input = 0;  // index into SessionState::inputs
  double entropy = 0.0;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::string input;
  std::string answer;
  ExampleKind kind = ExampleKind::Query;
  std::optional<double> entropy;  // of the input when it was selected
  std::vector<CandidateScore> candidates;
  std::size_t beliefSize = 0;
  std::vector<std::pair<std::string, double>> beliefTop;  // (description, prob)
  std::string best;
  std::string versionSpaceSize;
};

struct SessionState {
  std::vector<std::string> inputs;  // candidate pool I0, distinct, dataset order
  std::vector<bool> labeled;
  std::vector<synthesis::Example> examples;
  std::shared_ptr<const synthesis::VersionSpace> space;
  sampling::BeliefState belief;
  std::optional<std::size_t> query;  // index of the input awaiting an answer
  std::optional<double> queryEntropy;
  std::vector<CandidateScore> lastScores;
  std::size_t iteration = 0;
  ActiveConfig config;
  Status status = Status::Running;
  std::string failure;
  std::vector<IterationRecord> history;

  const dsl::Program* best() const { return belief.empty() ? nullptr : &belief.best(); }

  std::optional<std::size_t> indexOf(std::string_view input) const {
    for (std::size_t i = 0; i < inputs.size(); ++i)
      if (inputs[i] == input) return i;
    return std::nullopt;
  }
};

// Fresh session over a dataset. Duplicate rows collapse; the first row is
// the first query, answered before any program exists.
inline SessionState start(const std::vector<std::string>& dataset, ActiveConfig config) {
  config.validate();
  if (dataset.empty()) throw InvalidArgument("dataset is empty");
  SessionState st;
  std::unordered_set<std::string> seen;
  for (const auto& s : dataset)
    if (seen.insert(s).second) st.inputs.push_back(s);
  st.labeled.assign(st.inputs.size(), false);
  st.config = config;
  st.query = 0;
  return st;
}

namespace detail {

inline std::uint64_t mixSeed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Unlabeled inputs retained by the configured input-sampling mode, as
// ascending indices into state.inputs.
inline std::vector<std::size_t> candidateInputs(const SessionState& st) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < st.inputs.size(); ++i)
    if (!st.labeled[i]) pool.push_back(i);
  if (pool.empty()) return pool;
  std::vector<std::string> strings;
  for (auto i : pool) strings.push_back(st.inputs[i]);

  const auto& cfg = st.config;
  const auto seed = detail::mixSeed(cfg.sampling.seed ^ 0x5eedULL, st.iteration);
  std::vector<std::size_t> picked;
  auto witnesses = [&] {
    std::vector<dsl::Program> w;
    for (std::size_t i = 0; i < std::min(cfg.outputWitnesses, st.belief.size()); ++i)
      w.push_back(st.belief.entries[i].program);
    return w;
  };
  switch (cfg.inputSampling) {
    case InputSampling::Random:
      picked = clustering::randomSample(strings.size(), cfg.candidates, seed);
      break;
    case InputSampling::InputClustering:
      picked = clustering::diverseSample(clustering::partition(strings), cfg.candidates, seed);
      break;
    case InputSampling::OutputClustering:
      if (st.belief.empty()) {
        picked = clustering::randomSample(strings.size(), cfg.candidates, seed);
        break;
      }
      picked = clustering::diverseSample(clustering::outputPartition(strings, witnesses()), cfg.candidates, seed);
      break;
    case InputSampling::InputOutputClustering: {
      auto in = clustering::partition(strings);
      if (st.belief.empty()) {
        picked = clustering::diverseSample(in, cfg.candidates, seed);
        break;
      }
      auto both = clustering::intersect(in, clustering::outputPartition(strings, witnesses()));
      picked = clustering::diverseSample(both, cfg.candidates, seed);
      break;
    }
  }
  std::vector<std::size_t> out;
  for (auto i : picked) out.push_back(pool[i]);
  return out;
}

struct Selection {
  std::optional<std::size_t> input;  // nullopt: converged
  std::optional<double> entropy;
  std::vector<CandidateScore> scores;  // every candidate considered
};

// Picks the candidate with the largest output entropy (earliest input on
// ties). Reports convergence when that entropy is below epsilon or when the
// chosen input does not separate any two of the top-ranked programs.
inline Selection selectSignificantInput(const SessionState& st) {
  if (st.status != Status::Running) throw InvalidArgument("session is not running");
  const auto candidates = candidateInputs(st);
  if (candidates.empty()) throw ExhaustedInputs("no unlabeled inputs remain");

  Selection sel;
  if (st.belief.empty()) {
    sel.input = candidates.front();
    return sel;
  }
  const auto probs = probabilities(st.belief);
  double best = -1.0;
  for (auto i : candidates) {
    const auto outs = predict(st.belief, st.inputs[i]);
    const double h = outcomeEntropy(outputDistribution(probs, outs));
    sel.scores.push_back({i, h});
    best = std::max(best, h);
  }
  std::size_t chosen = 0;
  for (const auto& s : sel.scores) {
    if (s.entropy >= best - questions::kTieTolerance) {
      chosen = s.input;
      break;
    }
  }
  sel.entropy = best;
  if (best < st.config.epsilon) return sel;

  const std::size_t t = std::min(st.config.topDistinguish, st.belief.size());
  std::vector<dsl::Output> top;
  for (std::size_t j = 0; j < t; ++j) top.push_back(dsl::evaluate(st.belief.entries[j].program, st.inputs[chosen]));
  for (std::size_t a = 0; a < t; ++a)
    for (std::size_t b = a + 1; b < t; ++b)
      if (distinguishes(top[a], top[b])) {
        sel.input = chosen;
        return sel;
      }
  return sel;
}

namespace detail {

inline void refreshQuery(SessionState& st) {
  st.query.reset();
  st.queryEntropy.reset();
  st.lastScores.clear();
  if (st.status != Status::Running) return;
  Selection sel;
  try {
    sel = selectSignificantInput(st);
  } catch (const ExhaustedInputs&) {
    st.status = Status::Converged;
    return;
  }
  st.lastScores = std::move(sel.scores);
  if (!sel.input) {
    st.status = Status::Converged;
    return;
  }
  st.query = sel.input;
  st.queryEntropy = sel.entropy;
}

inline std::string countString(const synthesis::BigCount& c) { return c.str(); }

}  // namespace detail

// Adds the labeled example (inputs[index], answer), relearns, resamples and
// selects the next query. Used for answers to queries and for corrections
// supplied outside the loop.
inline SessionState teach(SessionState st, std::size_t index, const std::string& answer,
                          ExampleKind kind = ExampleKind::Correction) {
  if (index >= st.inputs.size()) throw NotFound("input index out of range");
  if (st.labeled[index]) throw InvalidArgument("input already labeled");
  IterationRecord rec;
  rec.input = st.inputs[index];
  rec.answer = answer;
  rec.kind = kind;
  if (st.query && *st.query == index) rec.entropy = st.queryEntropy;
  rec.candidates = st.lastScores;

  st.labeled[index] = true;
  synthesis::Example ex{st.inputs[index], answer};
  st.examples.push_back(ex);
  auto single = synthesis::learnExample(ex);
  auto space = st.space ? synthesis::intersect(*st.space, single) : std::move(single);
  st.space = std::make_shared<const synthesis::VersionSpace>(std::move(space));
  ++st.iteration;
  rec.iteration = st.iteration;
  rec.versionSpaceSize = detail::countString(st.space->count());

  if (st.space->empty()) {
    st.status = Status::Failed;
    st.failure = "no program in the DSL is consistent with the examples";
    st.belief = {};
    st.query.reset();
    st.queryEntropy.reset();
    st.history.push_back(std::move(rec));
    return st;
  }
  auto spec = st.config.sampling;
  spec.seed = detail::mixSeed(spec.seed, st.iteration);
  st.belief = sampling::sample(*st.space, spec);
  st.status = Status::Running;
  detail::refreshQuery(st);

  rec.beliefSize = st.belief.size();
  for (std::size_t j = 0; j < std::min<std::size_t>(5, st.belief.size()); ++j)
    rec.beliefTop.emplace_back(dsl::describe(st.belief.entries[j].program), st.belief.entries[j].prob);
  rec.best = dsl::describe(st.belief.best());
  st.history.push_back(std::move(rec));
  return st;
}

// Answers the pending query.
inline SessionState step(SessionState st, const std::string& answer) {
  if (!st.query) throw InvalidArgument("no query is pending");
  const auto index = *st.query;
  return teach(std::move(st), index, answer, ExampleKind::Query);
}

// ---------------------------------------------------------------------------
// Transcript

inline json toJson(const IterationRecord& r, const std::vector<std::string>& inputs) {
  json cands = json::array();
  for (const auto& c : r.candidates) cands.push_back({{"input", inputs[c.input]}, {"entropy", c.entropy}});
  json top = json::array();
  for (const auto& [desc, prob] : r.beliefTop) top.push_back({{"program", desc}, {"prob", prob}});
  return json{{"iteration", r.iteration},
              {"input", r.input},
              {"answer", r.answer},
              {"kind", r.kind == ExampleKind::Query ? "query" : "correction"},
              {"entropy", r.entropy ? json(*r.entropy) : json(nullptr)},
              {"candidates", std::move(cands)},
              {"belief", {{"size", r.beliefSize}, {"top", std::move(top)}}},
              {"best", r.best},
              {"version_space_size", r.versionSpaceSize}};
}

inline json transcript(const SessionState& st) {
  json examples = json::array();
  for (const auto& ex : st.examples) examples.push_back({{"input", ex.input}, {"output", ex.output}});
  json iterations = json::array();
  for (const auto& r : st.history) iterations.push_back(toJson(r, st.inputs));
  return json{{"status", name(st.status)},
              {"failure", st.failure},
              {"examples", std::move(examples)},
              {"iterations", std::move(iterations)},
              {"query", st.query ? json(st.inputs[*st.query]) : json(nullptr)},
              {"program", st.best() ? json(dsl::describe(*st.best())) : json(nullptr)},
              {"program_json", st.best() ? dsl::toJson(*st.best()) : json(nullptr)}};
}

}  // namespace apbe::active
