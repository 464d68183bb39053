#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "apbe/harness.hpp"

using namespace apbe;
using namespace apbe::harness;

namespace {

Scenario units() { return {"units", {"12 in", "8 in", "30 cm", "4 in"}, {"12", "8", "30", "4"}}; }

active::SessionState stateWithBest(const std::vector<std::string>& inputs, dsl::Program best) {
  auto st = active::start(inputs, active::ActiveConfig{});
  st.belief.entries.push_back({std::move(best), 1.0});
  return st;
}

dsl::Program firstChar() { return dsl::Program{{dsl::SubStr{dsl::AbsPos{0}, dsl::AbsPos{1}}}}; }

}  // namespace

TEST(Baseline, NextInputIsFirstMismatch) {
  const std::vector<std::string> in{"a1", "b2", "c3", "d4", "e5"};
  Scenario s{"s", in, {"a", "b", "c", "x", "e"}};
  auto st = stateWithBest(in, firstChar());
  EXPECT_EQ(baselineNextInput(st, s), "d4");

  s.outputs = {"a", "y", "c", "d", "z"};
  EXPECT_EQ(baselineNextInput(st, s), "b2");

  s.outputs = {"a", "b", "c", "d", "e"};
  EXPECT_THROW(baselineNextInput(st, s), NotApplicable);
  EXPECT_THROW(baselineNextInput(active::start(in, {}), s), NotApplicable);
}

TEST(Scenario, Validation) {
  EXPECT_THROW((Scenario{"x", {}, {}}.validate()), InvalidArgument);
  EXPECT_THROW((Scenario{"x", {"a"}, {}}.validate()), InvalidArgument);
  EXPECT_THROW((Scenario{"x", {"a", "a"}, {"1", "1"}}.validate()), InvalidArgument);
  auto s = scenarioFromJson(toJson(units()));
  EXPECT_EQ(s.truth("30 cm"), "30");
  EXPECT_THROW(s.truth("nope"), NotFound);
}

TEST(RunScenario, SolvableFromSeed) {
  Scenario s{"const", {"ab", "cd", "ef"}, {"z", "z", "z"}};
  for (auto ps : {ProgramSampling::Baseline, ProgramSampling::TopK, ProgramSampling::TopKRandomK}) {
    VariantConfig v;
    v.ps = ps;
    auto m = runScenario(s, v);
    EXPECT_TRUE(m.converged);
    EXPECT_EQ(m.iterations, 1u);
    EXPECT_EQ(m.falsePositives, 0u);
    EXPECT_EQ(m.falseNegatives, 0u);
    EXPECT_EQ(m.perIterationMillis.size(), 1u);
  }
}

TEST(RunScenario, BaselineNeverAsksFutileQuestions) {
  VariantConfig v;
  v.ps = ProgramSampling::Baseline;
  auto m = runScenario(units(), v);
  EXPECT_TRUE(m.converged);
  EXPECT_EQ(m.falsePositives, 0u);

  Scenario swap{"swap", {"Smith, John", "Doe, Jane", "Lee, Al"}, {"John Smith", "Jane Doe", "Al Lee"}};
  m = runScenario(swap, v);
  EXPECT_EQ(m.falsePositives, 0u);
  EXPECT_TRUE(m.converged);
}

TEST(RunScenario, UnitsScenarioWithInputClustering) {
  VariantConfig v;
  v.is = active::InputSampling::InputClustering;
  auto m = runScenario({"units", {"12 in", "8 in", "30 cm"}, {"12", "8", "30"}}, v, true);
  EXPECT_TRUE(m.converged);
  EXPECT_EQ(m.falseNegatives, 0u);
  EXPECT_EQ(m.iterations, 1u);
}

TEST(RunScenario, OracleFidelityAndAccounting) {
  auto s = units();
  for (auto v : variantMatrix(VariantConfig{})) {
    auto m = runScenario(s, v, true);
    ASSERT_TRUE(m.transcript);
    const auto& examples = (*m.transcript)["examples"];
    for (const auto& ex : examples) EXPECT_EQ(ex["output"], s.truth(ex["input"].get<std::string>()));
    EXPECT_EQ(m.iterations, examples.size()) << v.label();
    EXPECT_FALSE(m.timedOut && m.converged);
  }
}

TEST(RunScenario, InexpressibleTaskIsReported) {
  Scenario s{"bad", {"abc", "def"}, {"x", "y"}};
  for (auto ps : {ProgramSampling::Baseline, ProgramSampling::TopKRandomK}) {
    VariantConfig v;
    v.ps = ps;
    auto m = runScenario(s, v);
    EXPECT_FALSE(m.converged);
    EXPECT_FALSE(m.failure.empty());
  }
}

TEST(RunScenario, IterationCap) {
  VariantConfig v;
  v.maxIterations = 1;
  auto m = runScenario({"hard", {"Smith, John", "Doe, Jane", "Lee, Al"}, {"John Smith", "Jane Doe", "Al Lee"}}, v);
  EXPECT_LE(m.iterations, 1u);
}

TEST(RunScenario, Deterministic) {
  auto s = units();
  for (auto v : variantMatrix(VariantConfig{})) {
    auto a = runScenario(s, v, true);
    auto b = runScenario(s, v, true);
    EXPECT_EQ(a.iterations, b.iterations);
    EXPECT_EQ(a.falsePositives, b.falsePositives);
    EXPECT_EQ(a.falseNegatives, b.falseNegatives);
    EXPECT_EQ(a.transcript->dump(), b.transcript->dump());
  }
}

TEST(RunSuite, Rows) {
  EXPECT_TRUE(runSuite({units()}, {}).rows.empty());
  VariantConfig base;
  base.ps = ProgramSampling::Baseline;
  VariantConfig full;
  auto report = runSuite({units()}, {base, full});
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(report.rows[0].variant, "baseline");
  EXPECT_EQ(report.rows[0].falsePositives, 0u);
  EXPECT_EQ(report.rows[1].variant, "topk+random/random");
  const auto csv = report.csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "variant,solved_le1,solved_le2,solved_le3,solved_le4,solved_le32,fp,fn,timeouts");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(report.table().find("baseline"), std::string::npos);
}

TEST(RunSuite, SolvedBucketsAreCumulative) {
  auto report = runSuite({units(), {"const", {"ab", "cd"}, {"z", "z"}}}, variantMatrix(VariantConfig{}));
  EXPECT_EQ(report.rows.size(), 9u);
  for (const auto& r : report.rows) {
    for (std::size_t b = 1; b < 5; ++b) EXPECT_LE(r.solved[b - 1], r.solved[b]);
    EXPECT_EQ(r.solved[4], r.converged);
  }
}

TEST(LoadSuite, SkipsBrokenFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "apbe_suite_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "a.json") << toJson(units()).dump();
  std::ofstream(dir / "b.json") << "{not json";
  std::ofstream(dir / "c.json") << R"({"name":"c","inputs":["a"],"outputs":[]})";
  std::ofstream(dir / "d.txt") << "ignored";
  std::vector<LoadError> errors;
  auto suite = loadSuite(dir, &errors);
  ASSERT_EQ(suite.size(), 1u);
  EXPECT_EQ(suite[0].name, "units");
  EXPECT_EQ(errors.size(), 2u);
  std::filesystem::remove_all(dir);
}

TEST(LoadSuite, BundledSuiteIsExpressible) {
  std::vector<LoadError> errors;
  auto suite = loadSuite(APBE_SUITE_DIR, &errors);
  EXPECT_TRUE(errors.empty());
  EXPECT_GE(suite.size(), 30u);
  for (const auto& s : suite) {
    std::vector<synthesis::Example> exs;
    for (std::size_t i = 0; i < s.inputs.size(); ++i) exs.push_back({s.inputs[i], s.outputs[i]});
    EXPECT_FALSE(synthesis::learn(exs).empty()) << s.name;
  }
}

TEST(Variants, MatrixAndLabels) {
  auto m = variantMatrix(VariantConfig{});
  ASSERT_EQ(m.size(), 9u);
  EXPECT_EQ(m[0].label(), "baseline");
  EXPECT_EQ(m[1].label(), "topk/random");
  EXPECT_EQ(m[8].label(), "topk+random/io");
  EXPECT_EQ(m[1].activeConfig().sampling.random, 0u);
  EXPECT_EQ(m[8].activeConfig().sampling.random, 10u);
  EXPECT_EQ(parseProgramSampling("topk+random"), ProgramSampling::TopKRandomK);
  EXPECT_THROW(parseProgramSampling("x"), InvalidArgument);
}
