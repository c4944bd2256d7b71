#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wmid {

using TokenId = std::uint32_t;

// Token ids are 0..size-1. The label table is optional; when present it is
// injective. Text encoding is whitespace splitting against the label table;
// pieces without a label hash into the filler range.
class Vocabulary {
 public:
  explicit Vocabulary(std::size_t size);
  explicit Vocabulary(std::vector<std::string> labels, std::size_t filler_begin = 0);

  // Numerals "0".."100", end-of-sequence, a small English lexicon, the
  // punctuated numeral forms "N." and "N,", then digit-free fillers.
  static Vocabulary standard(std::size_t size);

  std::size_t size() const { return size_; }
  bool has_labels() const { return !labels_.empty(); }
  std::string label(TokenId id) const;
  std::optional<TokenId> find(std::string_view label) const;
  std::optional<TokenId> eos() const { return eos_; }

  // Integer value of a numeral token ("7", "7." and "7," all give 7).
  std::optional<int> numeral_value(TokenId id) const;

  TokenId encode_piece(std::string_view piece) const;
  std::vector<TokenId> encode(std::string_view text) const;
  std::string decode(std::span<const TokenId> ids) const;

 private:
  void index_labels();

  std::size_t size_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, TokenId> by_label_;
  std::unordered_map<std::string, TokenId> by_folded_;
  std::vector<int> numeral_;
  std::size_t filler_begin_ = 0;
  std::optional<TokenId> eos_;
};

// Lowercase with ASCII punctuation stripped; used for lexicon lookup.
std::string fold_piece(std::string_view piece);

}  // namespace wmid
