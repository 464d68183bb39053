#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "apbe/harness.hpp"
#include "apbe/service.hpp"

using namespace apbe;

namespace {

std::vector<std::string> splitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct BenchOptions {
  std::string suite = "data/suite";
  std::string ps = "baseline,topk,topk+random";
  std::string is = "random,input,output,io";
  std::size_t k = 10;
  std::size_t random = 10;
  std::size_t candidates = 100;
  std::uint64_t seed = 1;
  double timeout = 60.0;
  std::size_t maxIters = 32;
  std::size_t topDistinguish = 5;
  std::string out;
  std::string transcripts;
  bool quiet = false;
};

std::vector<harness::VariantConfig> variants(const BenchOptions& o) {
  harness::VariantConfig base;
  base.k = o.k;
  base.r = o.random;
  base.n = o.candidates;
  base.seed = o.seed;
  base.timeoutSeconds = o.timeout;
  base.maxIterations = o.maxIters;
  base.topDistinguish = o.topDistinguish;
  std::vector<harness::VariantConfig> out;
  for (const auto& p : splitList(o.ps)) {
    auto v = base;
    v.ps = harness::parseProgramSampling(p);
    if (v.ps == harness::ProgramSampling::Baseline) {
      out.push_back(v);
      continue;
    }
    for (const auto& i : splitList(o.is)) {
      v.is = active::parseInputSampling(i);
      out.push_back(v);
    }
  }
  return out;
}

int runBench(const BenchOptions& o) {
  std::vector<harness::LoadError> errors;
  const auto suite = harness::loadSuite(o.suite, &errors);
  for (const auto& e : errors) std::cerr << "skipping " << e.file << ": " << e.message << '\n';
  if (suite.empty()) {
    std::cerr << "no scenarios in " << o.suite << '\n';
    return 1;
  }
  const auto vs = variants(o);
  if (!o.transcripts.empty()) std::filesystem::create_directories(o.transcripts);

  auto report = harness::runSuite(suite, vs, [&](const harness::Scenario& s, const harness::VariantConfig& v,
                                                 const harness::Metrics& m) {
    if (!o.quiet)
      std::cerr << v.label() << ' ' << s.name << ": iterations=" << m.iterations << " fp=" << m.falsePositives
                << " fn=" << m.falseNegatives << (m.converged ? "" : " (not converged)")
                << (m.failure.empty() ? "" : " " + m.failure) << '\n';
    if (!o.transcripts.empty()) {
      auto rerun = harness::runScenario(s, v, true);
      auto name = v.label() + "__" + s.name + ".json";
      std::replace(name.begin(), name.end(), '/', '_');
      std::ofstream(std::filesystem::path(o.transcripts) / name) << rerun.transcript->dump(2) << '\n';
    }
  });

  std::cout << report.table();
  if (!o.out.empty()) {
    std::ofstream f(o.out);
    if (!f) {
      std::cerr << "cannot write " << o.out << '\n';
      return 1;
    }
    f << report.csv();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active programming-by-example engine"};
  app.require_subcommand(1);

  auto* bench = app.add_subcommand("bench", "Benchmark the learner on a scenario suite");
  bench->require_subcommand(1);
  auto* run = bench->add_subcommand("run", "Run every variant on every scenario");
  BenchOptions bo;
  run->add_option("--suite", bo.suite, "Directory of scenario JSON files")->check(CLI::ExistingDirectory);
  run->add_option("--ps", bo.ps, "Program sampling: comma list of baseline, topk, topk+random");
  run->add_option("--is", bo.is, "Input sampling: comma list of random, input, output, io");
  run->add_option("--k", bo.k, "Top-ranked programs in the belief");
  run->add_option("--random", bo.random, "Randomly drawn programs in the belief");
  run->add_option("--candidates", bo.candidates, "Candidate inputs scored per iteration");
  run->add_option("--seed", bo.seed);
  run->add_option("--timeout", bo.timeout, "Per-scenario timeout in seconds");
  run->add_option("--max-iters", bo.maxIters);
  run->add_option("--top-distinguish", bo.topDistinguish, "Programs checked by the convergence rule");
  run->add_option("--out", bo.out, "CSV report path");
  run->add_option("--transcripts", bo.transcripts, "Directory for per-run JSON transcripts");
  run->add_flag("-q,--quiet", bo.quiet);

  auto* serve = app.add_subcommand("serve", "Serve the session API over HTTP");
  service::ServerOptions so;
  serve->add_option("--host", so.host);
  serve->add_option("--port", so.port);
  serve->add_option("--top", so.config.sampling.top);
  serve->add_option("--random", so.config.sampling.random);
  std::string mode = "random";
  serve->add_option("--is", mode, "Input sampling: random, input, output, io");
  serve->add_option("--candidates", so.config.candidates);
  serve->add_option("--static", so.staticDir, "Directory served at /");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return runBench(bo);
    if (*serve) {
      so.config.inputSampling = active::parseInputSampling(mode);
      so.config.validate();
      return service::serve(so);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
