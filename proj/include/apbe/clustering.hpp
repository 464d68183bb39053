#pragma once

// Input sampling by string shape. A string's pattern collapses each maximal
// run of same-class characters into one symbol; letter runs also keep their
// text, so "12 in" and "30 cm" differ while "12 in" and "8 in" do not.
// Strings with equal patterns share a cluster. Output clustering groups inputs by the patterns of what
// the top-ranked programs produce on them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "apbe/dsl.hpp"
#include "apbe/errors.hpp"

namespace apbe::clustering {

inline constexpr std::size_t kMaxClusters = 64;
inline constexpr int kLongRun = 4;  // runs longer than this share one bucket

enum class Symbol : std::uint8_t { Digits, Lower, Upper, Whitespace, Literal };

struct Run {
  Symbol symbol = Symbol::Digits;
  char literal = 0;
  int length = 0;
  std::string text;  // letter runs only
  friend bool operator==(const Run&, const Run&) = default;
};

struct Pattern {
  std::vector<Run> runs;
  bool null = false;  // stands for a null program output

  friend bool operator==(const Pattern&, const Pattern&) = default;

  // Grouping key. With length buckets, run lengths up to kLongRun are kept
  // exactly and longer ones collapse to "+".
  std::string key(bool length_buckets = false) const {
    if (null) return "<null>";
    std::string out;
    for (const auto& r : runs) {
      switch (r.symbol) {
        case Symbol::Digits: out += 'D'; break;
        case Symbol::Lower: out += "L\"" + r.text + '"'; break;
        case Symbol::Upper: out += "U\"" + r.text + '"'; break;
        case Symbol::Whitespace: out += 'W'; break;
        case Symbol::Literal:
          out += '\'';
          out += r.literal;
          out += '\'';
          break;
      }
      if (length_buckets) out += r.length > kLongRun ? std::string("+") : std::to_string(r.length);
      out += ' ';
    }
    return out;
  }
};

inline Symbol symbolOf(char c) {
  if (dsl::isDigit(c)) return Symbol::Digits;
  if (dsl::isLower(c)) return Symbol::Lower;
  if (dsl::isUpper(c)) return Symbol::Upper;
  if (dsl::isSpace(c)) return Symbol::Whitespace;
  return Symbol::Literal;
}

inline Pattern abstract(std::string_view s) {
  Pattern p;
  for (char c : s) {
    const Symbol sym = symbolOf(c);
    const char lit = sym == Symbol::Literal ? c : 0;
    if (!p.runs.empty() && p.runs.back().symbol == sym && p.runs.back().literal == lit)
      ++p.runs.back().length;
    else
      p.runs.push_back({sym, lit, 1, {}});
    if (sym == Symbol::Lower || sym == Symbol::Upper) p.runs.back().text += c;
  }
  return p;
}

inline Pattern nullPattern() { return Pattern{{}, true}; }

// Disjoint clusters over the positions of a dataset.
struct Partition {
  std::vector<std::size_t> clusterOf;            // dataset position -> cluster
  std::vector<std::vector<std::size_t>> clusters;  // cluster -> dataset positions
  std::size_t overflow = 0;  // distinct keys folded into the catch-all cluster

  std::size_t size() const { return clusters.size(); }
  std::size_t datasetSize() const { return clusterOf.size(); }
};

// Groups positions by key in order of first occurrence. Past max_clusters
// distinct keys the remaining keys share the last cluster.
inline Partition partitionByKey(const std::vector<std::string>& keys,
                                std::size_t max_clusters = kMaxClusters) {
  Partition part;
  std::unordered_map<std::string, std::size_t> ids;
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto it = ids.find(keys[i]);
    if (it == ids.end()) {
      ++distinct;
      std::size_t id = std::min(ids.size(), max_clusters - 1);
      if (distinct > max_clusters) ++part.overflow;
      it = ids.emplace(keys[i], id).first;
      if (id == part.clusters.size()) part.clusters.emplace_back();
    }
    part.clusterOf.push_back(it->second);
    part.clusters[it->second].push_back(i);
  }
  return part;
}

inline Partition partition(const std::vector<std::string>& dataset, bool length_buckets = false,
                           std::size_t max_clusters = kMaxClusters) {
  std::vector<std::string> keys;
  keys.reserve(dataset.size());
  for (const auto& s : dataset) keys.push_back(abstract(s).key(length_buckets));
  return partitionByKey(keys, max_clusters);
}

// Inputs keyed by the tuple of patterns of the witnesses' outputs.
inline Partition outputPartition(const std::vector<std::string>& inputs,
                                 const std::vector<dsl::Program>& witnesses,
                                 std::size_t max_clusters = kMaxClusters) {
  if (witnesses.empty()) throw InvalidArgument("output clustering needs at least one witness");
  std::vector<std::string> keys;
  keys.reserve(inputs.size());
  for (const auto& in : inputs) {
    std::string key;
    for (const auto& w : witnesses) {
      const auto out = dsl::evaluate(w, in);
      key += (out.isNull() ? nullPattern() : abstract(*out.value)).key();
      key += '|';
    }
    keys.push_back(std::move(key));
  }
  return partitionByKey(keys, max_clusters);
}

// Cluster = pair of cluster ids.
inline Partition intersect(const Partition& a, const Partition& b,
                           std::size_t max_clusters = kMaxClusters) {
  if (a.datasetSize() != b.datasetSize()) throw InvalidArgument("partitions cover different datasets");
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < a.datasetSize(); ++i)
    keys.push_back(std::to_string(a.clusterOf[i]) + "," + std::to_string(b.clusterOf[i]));
  return partitionByKey(keys, max_clusters);
}

// ceil(n * |cluster| / |dataset|) members drawn without replacement from every
// cluster. Returns dataset positions in ascending order.
inline std::vector<std::size_t> diverseSample(const Partition& part, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample size must be positive");
  const std::size_t total = part.datasetSize();
  std::vector<std::size_t> out;
  if (n >= total) {
    out.resize(total);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
  }
  std::mt19937_64 rng(seed);
  for (const auto& cluster : part.clusters) {
    const std::size_t want = (n * cluster.size() + total - 1) / total;
    auto members = cluster;
    std::shuffle(members.begin(), members.end(), rng);
    members.resize(std::min(want, members.size()));
    out.insert(out.end(), members.begin(), members.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Uniform sample of min(n, size) positions, ascending.
inline std::vector<std::size_t> randomSample(std::size_t size, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> out(size);
  std::iota(out.begin(), out.end(), std::size_t{0});
  if (n >= size) return out;
  std::mt19937_64 rng(seed);
  std::shuffle(out.begin(), out.end(), rng);
  out.resize(n);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace apbe::clustering
