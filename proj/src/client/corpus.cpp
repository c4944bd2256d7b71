#include "wmid/client/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>

#include "wmid/core/prf.hpp"
#include "wmid/error.hpp"

namespace wmid {

PromptCorpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read corpus " + path.string());
  PromptCorpus c;
  c.source = path.filename().string();
  const std::string stem = path.stem().string();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    c.entries.push_back({stem + ":" + std::to_string(lineno), line});
  }
  if (in.bad()) throw IoError("error reading corpus " + path.string());
  if (c.entries.empty()) throw ArgumentError("corpus " + path.string() + " has no non-blank lines");
  return c;
}

std::filesystem::path bundled_corpus_dir() {
  if (const char* env = std::getenv("WMID_CORPUS_DIR"); env && *env) return env;
  return std::filesystem::path(WMID_DATA_DIR) / "corpora";
}

namespace {

std::vector<std::size_t> draw(std::size_t size, std::size_t count, SplitMix& rng, bool& replaced) {
  std::vector<std::size_t> out;
  if (count > size) {
    replaced = true;
    for (std::size_t i = 0; i < count; ++i) out.push_back(static_cast<std::size_t>(rng.below(size)));
    return out;
  }
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    auto j = i + static_cast<std::size_t>(rng.below(size - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  return idx;
}

}  // namespace

PrefixSelection sample_prefixes(const std::vector<PromptCorpus>& corpora,
                                const std::vector<double>& shares, std::size_t M,
                                std::uint64_t seed) {
  if (corpora.empty()) throw ArgumentError("no corpora given");
  if (shares.size() != corpora.size()) throw ArgumentError("one share per corpus required");
  double sum = 0.0;
  for (double s : shares) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ArgumentError("shares must be finite and >= 0");
    sum += s;
  }
  if (!(sum > 0.0)) throw ArgumentError("shares sum to zero");
  for (std::size_t c = 0; c < corpora.size(); ++c)
    if (shares[c] > 0.0 && corpora[c].entries.empty())
      throw ArgumentError("corpus '" + corpora[c].source + "' is empty");

  // Largest remainders; ties go to the earlier corpus.
  std::vector<std::size_t> counts(corpora.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < corpora.size(); ++c) {
    double exact = static_cast<double>(M) * shares[c] / sum;
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[c];
    rem.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(rem.begin(), rem.end(), [](auto a, auto b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < M; ++r, ++assigned) ++counts[rem[r % rem.size()].second];

  PrefixSelection sel;
  std::vector<std::vector<std::size_t>> picks(corpora.size());
  for (std::size_t c = 0; c < corpora.size(); ++c) {
    SplitMix rng(mix_seed(seed, c));
    picks[c] = draw(corpora[c].entries.size(), counts[c], rng, sel.with_replacement);
  }

  // Interleave: next slot goes to the corpus furthest behind its quota.
  std::vector<std::size_t> used(corpora.size(), 0);
  for (std::size_t t = 0; t < M; ++t) {
    std::size_t best = corpora.size();
    double best_lag = -1e300;
    for (std::size_t c = 0; c < corpora.size(); ++c) {
      if (used[c] >= counts[c]) continue;
      double lag = static_cast<double>(t + 1) * static_cast<double>(counts[c]) / static_cast<double>(M) -
                   static_cast<double>(used[c]);
      if (lag > best_lag) {
        best_lag = lag;
        best = c;
      }
    }
    sel.entries.push_back(corpora[best].entries[picks[best][used[best]++]]);
    sel.sources.push_back(corpora[best].source);
  }
  return sel;
}

PrefixSelection sample_prefixes(const PromptCorpus& corpus, std::size_t M, std::uint64_t seed) {
  return sample_prefixes(std::vector<PromptCorpus>{corpus}, {1.0}, M, seed);
}

}  // namespace wmid
