#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace seqpt::text {

/// A document split into sentences. Joining `sentences` with single spaces
/// reproduces the whitespace-normalized source text.
struct SentenceSplit {
  std::vector<std::string> sentences;

  std::size_t size() const noexcept { return sentences.size(); }
  bool empty() const noexcept { return sentences.empty(); }
  std::string joined() const;
};

bool is_space(char c) noexcept;

/// Collapses every whitespace run to a single space and trims both ends.
std::string normalize_whitespace(std::string_view text);

/// Splits after '.', '!' or '?' when the terminator is followed by whitespace
/// or the end of the text. A trailing unterminated fragment is kept as the
/// last sentence. Abbreviations ("Dr.") are split like any other full stop.
SentenceSplit segment_sentences(std::string_view text);

}  // namespace seqpt::text
