#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace seqpt::rouge {

using Words = std::vector<std::string>;

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

enum class Variant { kRouge1, kRouge2, kRougeL };
enum class Protocol { kFullLengthF1, kLimitedLengthRecall };

std::string_view to_string(Variant v);
std::string_view to_string(Protocol p);
Variant parse_variant(std::string_view name);    // r1 | r2 | rl
Protocol parse_protocol(std::string_view name);  // f1 | limited-recall

/// Scoring tokenizer: ASCII-lowercases, splits on whitespace and emits every
/// ASCII punctuation character as its own token.
Words tokenize(std::string_view text);

/// First `n` whitespace-separated words of `text`, single-space joined.
std::string truncate_words(std::string_view text, std::size_t n);
std::size_t count_words(std::string_view text);

/// Size of the clipped (multiset) n-gram intersection.
std::size_t ngram_overlap(std::span<const std::string> candidate,
                          std::span<const std::string> reference, std::size_t n);

RougeScore rouge_n(std::span<const std::string> candidate, std::span<const std::string> reference,
                   std::size_t n);

/// Longest common subsequence length. Bit-parallel (Hyyro) when the shorter
/// side fits in 64 bits, one DP row otherwise.
template <typename T>
std::size_t lcs_length(std::span<const T> a, std::span<const T> b) {
  if (a.size() > b.size()) std::swap(a, b);
  if (a.empty()) return 0;
  if (a.size() <= 64) {
    std::uint64_t v = ~std::uint64_t{0};
    for (const auto& y : b) {
      std::uint64_t match = 0;
      for (std::size_t i = 0; i < a.size(); ++i) match |= std::uint64_t{a[i] == y} << i;
      const std::uint64_t u = v & match;
      v = (v + u) | (v - u);
    }
    const std::uint64_t live = a.size() == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << a.size()) - 1;
    return static_cast<std::size_t>(std::popcount(~v & live));
  }
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (const auto& x : a) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = x == b[j - 1] ? diag + 1 : (up > row[j - 1] ? up : row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

RougeScore rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference);

RougeScore score(Variant variant, std::span<const std::string> candidate,
                 std::span<const std::string> reference);
RougeScore score_text(Variant variant, std::string_view candidate, std::string_view reference);

struct TextPair {
  std::string candidate;
  std::string reference;
};

/// Macro average over pairs. Under the limited-length protocol each candidate
/// is first cut to its reference's word count.
RougeScore score_corpus(std::span<const TextPair> pairs, Variant variant, Protocol protocol);

/// F1 for the full-length protocol, recall for the limited-length one.
double headline(const RougeScore& s, Protocol protocol);

}  // namespace seqpt::rouge
