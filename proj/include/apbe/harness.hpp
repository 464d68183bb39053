#pragma once

// Benchmark harness: replays a scenario against a simulated user who knows
// the intended output of every input, and counts iterations, false
// positives (queries whose answer the best program already predicted) and
// false negatives (convergence on a program that is still wrong somewhere).

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "apbe/active.hpp"
#include "apbe/dsl.hpp"
#include "apbe/errors.hpp"
#include "apbe/version_space.hpp"

namespace apbe::harness {

using nlohmann::json;

struct Scenario {
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;  // truth, paired by position

  void validate() const {
    if (inputs.empty()) throw InvalidArgument("scenario " + name + " has no inputs");
    if (inputs.size() != outputs.size())
      throw InvalidArgument("scenario " + name + " has unequal inputs and outputs");
    std::vector<std::string> sorted = inputs;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw InvalidArgument("scenario " + name + " has duplicate inputs");
  }

  const std::string& truth(std::string_view input) const {
    for (std::size_t i = 0; i < inputs.size(); ++i)
      if (inputs[i] == input) return outputs[i];
    throw NotFound("input not in scenario " + name);
  }
};

inline Scenario scenarioFromJson(const json& j) {
  Scenario s{j.at("name").get<std::string>(), j.at("inputs").get<std::vector<std::string>>(),
             j.at("outputs").get<std::vector<std::string>>()};
  s.validate();
  return s;
}

inline json toJson(const Scenario& s) {
  return json{{"name", s.name}, {"inputs", s.inputs}, {"outputs", s.outputs}};
}

inline Scenario loadScenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw NotFound("cannot open " + file.string());
  try {
    return scenarioFromJson(json::parse(in));
  } catch (const json::exception& e) {
    throw InvalidArgument(file.string() + ": " + e.what());
  }
}

struct LoadError {
  std::string file;
  std::string message;
};

// Every *.json file in dir, sorted by file name. Broken files are reported
// and skipped.
inline std::vector<Scenario> loadSuite(const std::filesystem::path& dir, std::vector<LoadError>* errors = nullptr) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<Scenario> out;
  for (const auto& f : files) {
    try {
      out.push_back(loadScenario(f));
    } catch (const std::exception& e) {
      if (errors) errors->push_back({f.string(), e.what()});
    }
  }
  return out;
}

enum class ProgramSampling { Baseline, TopK, TopKRandomK };

inline std::string_view name(ProgramSampling ps) {
  switch (ps) {
    case ProgramSampling::Baseline: return "baseline";
    case ProgramSampling::TopK: return "topk";
    case ProgramSampling::TopKRandomK: return "topk+random";
  }
  return "?";
}

inline ProgramSampling parseProgramSampling(std::string_view s) {
  for (auto ps : {ProgramSampling::Baseline, ProgramSampling::TopK, ProgramSampling::TopKRandomK})
    if (name(ps) == s) return ps;
  throw InvalidArgument("unknown program sampling " + std::string(s));
}

struct VariantConfig {
  ProgramSampling ps = ProgramSampling::TopKRandomK;
  active::InputSampling is = active::InputSampling::Random;
  std::size_t k = 10;
  std::size_t r = 10;
  std::size_t n = 100;
  std::uint64_t seed = 1;
  double timeoutSeconds = 60.0;
  std::size_t maxIterations = 32;
  std::size_t topDistinguish = 5;
  std::size_t outputWitnesses = 1;

  std::string label() const {
    if (ps == ProgramSampling::Baseline) return "baseline";
    return std::string(name(ps)) + "/" + std::string(active::name(is));
  }

  active::ActiveConfig activeConfig() const {
    active::ActiveConfig cfg;
    cfg.sampling = {k, ps == ProgramSampling::TopKRandomK ? r : 0, seed};
    cfg.inputSampling = is;
    cfg.candidates = n;
    cfg.maxIterations = maxIterations;
    cfg.topDistinguish = topDistinguish;
    cfg.outputWitnesses = outputWitnesses;
    return cfg;
  }
};

struct Metrics {
  std::size_t iterations = 0;
  std::size_t falsePositives = 0;
  std::size_t falseNegatives = 0;
  bool timedOut = false;
  bool converged = false;
  std::string failure;
  std::vector<double> perIterationMillis;
  std::optional<json> transcript;
};

// First input (dataset order) on which `program` disagrees with the truth.
inline std::optional<std::size_t> firstMismatch(const dsl::Program& program, const Scenario& s) {
  for (std::size_t i = 0; i < s.inputs.size(); ++i)
    if (dsl::evaluate(program, s.inputs[i]) != dsl::Output::of(s.outputs[i])) return i;
  return std::nullopt;
}

// The baseline user's choice: the first row where the current best program
// is wrong. Returns the row's input.
inline std::string baselineNextInput(const active::SessionState& st, const Scenario& s) {
  const auto* best = st.best();
  if (!best) throw NotApplicable("session has no program yet");
  auto i = firstMismatch(*best, s);
  if (!i) throw NotApplicable("best program already matches every row");
  return s.inputs[*i];
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double millisSince(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace detail

// Iterations count learning rounds, i.e. the number of labeled examples,
// including the first row that seeds every run.
inline Metrics runScenario(const Scenario& s, const VariantConfig& v, bool keep_transcript = false) {
  s.validate();
  Metrics m;
  const auto started = detail::Clock::now();
  auto expired = [&] {
    return std::chrono::duration<double>(detail::Clock::now() - started).count() > v.timeoutSeconds;
  };

  auto state = active::start(s.inputs, v.activeConfig());

  auto teach = [&](std::size_t index, active::ExampleKind kind) {
    const auto t0 = detail::Clock::now();
    const auto& answer = s.truth(state.inputs[index]);
    if (kind == active::ExampleKind::Query && state.query && *state.query == index) {
      state = active::step(std::move(state), answer);
    } else {
      state = active::teach(std::move(state), index, answer, kind);
    }
    m.perIterationMillis.push_back(detail::millisSince(t0));
    ++m.iterations;
  };

  if (v.ps == ProgramSampling::Baseline) {
    // Passive learner: the user points at the first wrong row every round.
    teach(0, active::ExampleKind::Correction);
    while (true) {
      if (state.status == active::Status::Failed) break;
      const auto t0 = detail::Clock::now();
      const auto best = synthesis::topK(*state.space, 1).front();
      const auto miss = firstMismatch(best, s);
      m.perIterationMillis.back() += detail::millisSince(t0);
      if (!miss) {
        m.converged = true;
        break;
      }
      ++m.falseNegatives;
      if (m.iterations >= v.maxIterations) break;
      if (expired()) {
        m.timedOut = true;
        break;
      }
      teach(*state.indexOf(s.inputs[*miss]), active::ExampleKind::Correction);
    }
  } else {
    teach(0, active::ExampleKind::Query);
    while (true) {
      if (state.status == active::Status::Failed) break;
      if (state.status == active::Status::Converged) {
        const auto miss = firstMismatch(*state.best(), s);
        if (!miss) {
          m.converged = true;
          break;
        }
        ++m.falseNegatives;
        if (m.iterations >= v.maxIterations) break;
        if (expired()) {
          m.timedOut = true;
          break;
        }
        teach(*state.indexOf(s.inputs[*miss]), active::ExampleKind::Correction);
        continue;
      }
      if (m.iterations >= v.maxIterations) break;
      if (expired()) {
        m.timedOut = true;
        break;
      }
      const auto q = *state.query;
      if (dsl::evaluate(*state.best(), state.inputs[q]) == dsl::Output::of(s.truth(state.inputs[q])))
        ++m.falsePositives;
      teach(q, active::ExampleKind::Query);
    }
  }
  if (state.status == active::Status::Failed) m.failure = state.failure;
  if (keep_transcript) m.transcript = active::transcript(state);
  return m;
}

inline constexpr std::size_t kIterationBuckets[] = {1, 2, 3, 4, 32};

struct VariantSummary {
  std::string variant;
  std::size_t scenarios = 0;
  std::size_t solved[5] = {0, 0, 0, 0, 0};  // converged within <= 1, 2, 3, 4, 32 iterations
  std::size_t falsePositives = 0;
  std::size_t falseNegatives = 0;
  std::size_t timeouts = 0;
  std::size_t converged = 0;
  std::vector<double> iterationMillis;

  double medianIterationMillis() const {
    if (iterationMillis.empty()) return 0.0;
    auto v = iterationMillis;
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  }
};

struct Report {
  std::vector<VariantSummary> rows;

  std::string csv() const {
    std::ostringstream out;
    out << "variant,solved_le1,solved_le2,solved_le3,solved_le4,solved_le32,fp,fn,timeouts\n";
    for (const auto& r : rows) {
      out << r.variant;
      for (auto n : r.solved) out << ',' << n;
      out << ',' << r.falsePositives << ',' << r.falseNegatives << ',' << r.timeouts << '\n';
    }
    return out.str();
  }

  std::string table() const {
    std::ostringstream out;
    out << std::left << std::setw(22) << "variant" << std::right;
    for (auto b : kIterationBuckets) out << std::setw(6) << ("<=" + std::to_string(b));
    out << std::setw(7) << "FP" << std::setw(7) << "FN" << std::setw(9) << "timeout" << std::setw(12)
        << "median ms" << '\n';
    for (const auto& r : rows) {
      out << std::left << std::setw(22) << r.variant << std::right;
      for (auto n : r.solved) out << std::setw(6) << n;
      out << std::setw(7) << r.falsePositives << std::setw(7) << r.falseNegatives << std::setw(9)
          << r.timeouts << std::setw(12) << std::fixed << std::setprecision(2) << r.medianIterationMillis()
          << '\n';
    }
    return out.str();
  }
};

inline void accumulate(VariantSummary& row, const Metrics& m) {
  ++row.scenarios;
  for (std::size_t b = 0; b < std::size(kIterationBuckets); ++b)
    if (m.converged && m.iterations <= kIterationBuckets[b]) ++row.solved[b];
  row.falsePositives += m.falsePositives;
  row.falseNegatives += m.falseNegatives;
  row.timeouts += m.timedOut ? 1 : 0;
  row.converged += m.converged ? 1 : 0;
  row.iterationMillis.insert(row.iterationMillis.end(), m.perIterationMillis.begin(), m.perIterationMillis.end());
}

// on_result, when given, sees every (scenario, variant, metrics) triple.
template <typename Callback>
Report runSuite(const std::vector<Scenario>& scenarios, const std::vector<VariantConfig>& variants,
                Callback&& on_result) {
  Report report;
  for (const auto& v : variants) {
    VariantSummary row;
    row.variant = v.label();
    for (const auto& s : scenarios) {
      const auto m = runScenario(s, v);
      on_result(s, v, m);
      accumulate(row, m);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline Report runSuite(const std::vector<Scenario>& scenarios, const std::vector<VariantConfig>& variants) {
  return runSuite(scenarios, variants, [](const Scenario&, const VariantConfig&, const Metrics&) {});
}

// The baseline plus every (program sampling x input sampling) combination.
inline std::vector<VariantConfig> variantMatrix(const VariantConfig& base) {
  std::vector<VariantConfig> out;
  VariantConfig b = base;
  b.ps = ProgramSampling::Baseline;
  out.push_back(b);
  for (auto ps : {ProgramSampling::TopK, ProgramSampling::TopKRandomK}) {
    for (auto is : {active::InputSampling::Random, active::InputSampling::InputClustering,
                    active::InputSampling::OutputClustering, active::InputSampling::InputOutputClustering}) {
      VariantConfig v = base;
      v.ps = ps;
      v.is = is;
      out.push_back(v);
    }
  }
  return out;
}

}  // namespace apbe::harness
