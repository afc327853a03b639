#include "seqpt/text/segment.hpp"

namespace seqpt::text {

std::string SentenceSplit::joined() const {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out.push_back(' ');
    out += s;
  }
  return out;
}

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

SentenceSplit segment_sentences(std::string_view text) {
  const std::string norm = normalize_whitespace(text);
  SentenceSplit split;
  std::size_t start = 0;
  for (std::size_t i = 0; i < norm.size(); ++i) {
    const char c = norm[i];
    if (c != '.' && c != '!' && c != '?') continue;
    const bool at_end = i + 1 == norm.size();
    if (!at_end && norm[i + 1] != ' ') continue;
    split.sentences.emplace_back(norm.substr(start, i + 1 - start));
    start = i + 2;  // skip the single separating space
  }
  if (start < norm.size()) split.sentences.emplace_back(norm.substr(start));
  return split;
}

}  // namespace seqpt::text
