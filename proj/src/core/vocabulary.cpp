#include "wmid/core/vocabulary.hpp"

#include <array>
#include <cctype>
#include <sstream>

#include "wmid/core/prf.hpp"
#include "wmid/error.hpp"

namespace wmid {

namespace {

const char* const kLexicon[] = {
    "the", "of", "and", "a", "to", "in", "is", "you", "that", "it", "he", "was",
    "for", "on", "are", "as", "with", "his", "they", "i", "at", "be", "this",
    "have", "from", "or", "one", "had", "by", "word", "but", "not", "what", "all",
    "were", "we", "when", "your", "can", "said", "there", "use", "an", "each",
    "which", "she", "do", "how", "their", "if", "will", "up", "other", "about",
    "out", "many", "then", "them", "these", "so", "some", "her", "would", "make",
    "like", "him", "into", "time", "has", "look", "two", "more", "write", "go",
    "see", "number", "no", "way", "could", "people", "my", "than", "first",
    "water", "been", "call", "who", "oil", "its", "now", "find", "long", "down",
    "day", "did", "get", "come", "made", "may", "part", "over", "new", "sound",
    "take", "only", "little", "work", "know", "place", "year", "live", "me",
    "back", "give", "most", "very", "after", "thing", "our", "just", "name",
    "good", "sentence", "man", "think", "say", "great", "where", "help", "through",
    "much", "before", "line", "right", "too", "mean", "old", "any", "same", "tell",
    "boy", "follow", "came", "want", "show", "also", "around", "form", "three",
    "small", "set", "put", "end", "does", "another", "well", "large", "must",
    "big", "even", "such", "because", "turn", "here", "why", "ask", "went", "men",
    "read", "need", "land", "different", "home", "us", "move", "try", "kind",
    "hand", "picture", "again", "change", "off", "play", "spell", "air", "away",
    "animal", "house", "point", "page", "letter", "mother", "answer", "found",
    "study", "still", "learn", "should", "world", "high", "every", "near", "add",
    "food", "between", "own", "below", "country", "plant", "last", "school",
    "father", "keep", "tree", "never", "start", "city", "earth", "eye", "light",
    "story", "instruction", "describes", "task", "response", "appropriately",
    "completes", "request", "generate", "random", "choose", "digits", "uniformly",
    "string", "those", "previous", "influence", "future", "river", "morning",
    "evening", "night", "road", "market", "winter", "summer"};

bool has_digit(std::string_view s) {
  for (char c : s)
    if (std::isdigit(static_cast<unsigned char>(c))) return true;
  return false;
}

std::string filler(std::size_t i) {
  static const char* cons = "bdfghklmnprstvz";
  static const char* vows = "aeiou";
  std::string s;
  std::size_t v = i;
  do {
    s.push_back(cons[v % 15]);
    v /= 15;
    s.push_back(vows[v % 5]);
    v /= 5;
  } while (v > 0);
  return "~" + s;
}

}  // namespace

std::string fold_piece(std::string_view piece) {
  std::string out;
  out.reserve(piece.size());
  for (char c : piece) {
    auto u = static_cast<unsigned char>(c);
    if (std::ispunct(u)) continue;
    out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

Vocabulary::Vocabulary(std::size_t size) : size_(size), numeral_(size, -1) {
  if (size < 2) throw ArgumentError("vocabulary size must be at least 2");
}

Vocabulary::Vocabulary(std::vector<std::string> labels, std::size_t filler_begin)
    : size_(labels.size()), labels_(std::move(labels)), filler_begin_(filler_begin) {
  if (size_ < 2) throw ArgumentError("vocabulary size must be at least 2");
  if (filler_begin_ >= size_) filler_begin_ = 0;
  index_labels();
}

void Vocabulary::index_labels() {
  numeral_.assign(size_, -1);
  for (TokenId i = 0; i < labels_.size(); ++i) {
    const auto& l = labels_[i];
    if (l.empty() || l.find_first_of(" \t\r\n") != std::string::npos)
      throw ArgumentError("labels must be non-empty and contain no whitespace");
    if (!by_label_.emplace(l, i).second) throw ArgumentError("duplicate label: " + l);
    if (l == "</s>") eos_ = i;
    auto folded = fold_piece(l);
    if (!folded.empty() && !has_digit(l)) by_folded_.emplace(folded, i);
    // Numerals: optional trailing '.' or ','.
    std::string_view d = l;
    if (!d.empty() && (d.back() == '.' || d.back() == ',')) d.remove_suffix(1);
    if (!d.empty() && d.size() <= 3 && d.find_first_not_of("0123456789") == std::string::npos &&
        (d.size() == 1 || d[0] != '0')) {
      numeral_[i] = std::stoi(std::string(d));
    }
  }
}

Vocabulary Vocabulary::standard(std::size_t size) {
  if (size < 2) throw ArgumentError("vocabulary size must be at least 2");
  std::vector<std::string> labels;
  labels.reserve(size);
  auto push = [&](std::string s) {
    if (labels.size() < size) labels.push_back(std::move(s));
  };
  for (int v = 0; v <= 100; ++v) push(std::to_string(v));
  push("</s>");
  for (const char* w : kLexicon) push(w);
  for (int v = 1; v <= 100; ++v) push(std::to_string(v) + ".");
  for (int v = 1; v <= 100; ++v) push(std::to_string(v) + ",");
  std::size_t filler_begin = labels.size();
  for (std::size_t i = 0; labels.size() < size; ++i) push(filler(i));
  return Vocabulary(std::move(labels), filler_begin);
}

std::string Vocabulary::label(TokenId id) const {
  if (id >= size_) throw InvalidContextError("token id out of range");
  if (labels_.empty()) return "<" + std::to_string(id) + ">";
  return labels_[id];
}

std::optional<TokenId> Vocabulary::find(std::string_view label) const {
  auto it = by_label_.find(std::string(label));
  if (it == by_label_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> Vocabulary::numeral_value(TokenId id) const {
  if (id >= size_ || numeral_[id] < 0) return std::nullopt;
  return numeral_[id];
}

TokenId Vocabulary::encode_piece(std::string_view piece) const {
  if (!labels_.empty()) {
    if (auto it = by_label_.find(std::string(piece)); it != by_label_.end()) return it->second;
    if (auto it = by_folded_.find(fold_piece(piece)); it != by_folded_.end()) return it->second;
  }
  std::uint64_t h = digest_u64(sha256(piece));
  std::size_t begin = labels_.empty() ? 0 : filler_begin_;
  return static_cast<TokenId>(begin + h % (size_ - begin));
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.push_back(encode_piece(text.substr(i, j - i)));
    i = j;
  }
  return out;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back(' ');
    out += label(ids[i]);
  }
  return out;
}

}  // namespace wmid
