#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wmid {

struct CorpusEntry {
  std::string id;
  std::string text;
};

struct PromptCorpus {
  std::vector<CorpusEntry> entries;
  std::string source;
};

// Non-blank lines of a UTF-8 text file; ids are "<stem>:<line number>".
PromptCorpus load_corpus(const std::filesystem::path& path);

// Bundled stand-in corpora shipped in data/corpora.
std::filesystem::path bundled_corpus_dir();

struct PrefixSelection {
  std::vector<CorpusEntry> entries;
  std::vector<std::string> sources;  // corpus of each entry
  bool with_replacement = false;
};

// M prefixes drawn uniformly without replacement from each corpus (with
// replacement, flagged, when a corpus is too small). Shares are
// normalized; per-corpus counts follow largest remainders and the result
// interleaves corpora proportionally.
PrefixSelection sample_prefixes(const std::vector<PromptCorpus>& corpora,
                                const std::vector<double>& shares, std::size_t M,
                                std::uint64_t seed);
PrefixSelection sample_prefixes(const PromptCorpus& corpus, std::size_t M, std::uint64_t seed);

}  // namespace wmid
