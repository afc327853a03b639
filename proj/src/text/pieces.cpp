#include "seqpt/text/pieces.hpp"

#include <algorithm>

#include "seqpt/error.hpp"

namespace seqpt::text {

std::vector<TokenSeq> split_pieces(std::span<const TokenId> doc, std::size_t piece_len) {
  if (piece_len == 0) throw InvalidArgument("piece_len must be >= 1");
  std::vector<TokenSeq> pieces;
  for (std::size_t start = 0; start + piece_len <= doc.size(); start += piece_len) {
    auto window = doc.subspan(start, piece_len);
    pieces.emplace_back(window.begin(), window.end());
  }
  return pieces;
}

TokenSeq truncate(std::span<const TokenId> seq, std::size_t max_len) {
  if (max_len == 0) throw InvalidArgument("max_len must be >= 1");
  const auto n = std::min(seq.size(), max_len);
  return TokenSeq(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(n));
}

TokenSeq keep_last(std::span<const TokenId> seq, std::size_t max_len) {
  if (max_len == 0) throw InvalidArgument("max_len must be >= 1");
  const auto n = std::min(seq.size(), max_len);
  return TokenSeq(seq.end() - static_cast<std::ptrdiff_t>(n), seq.end());
}

}  // namespace seqpt::text
