#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "seqpt/text/bpe.hpp"

namespace seqpt::text {

inline constexpr std::size_t kDefaultPieceLen = 512;
inline constexpr std::size_t kMaxSourceLen = 512;
inline constexpr std::size_t kMaxTargetLen = 256;

/// Non-overlapping windows of exactly `piece_len` tokens. A shorter trailing
/// remainder is dropped, so documents shorter than `piece_len` yield nothing.
std::vector<TokenSeq> split_pieces(std::span<const TokenId> doc,
                                   std::size_t piece_len = kDefaultPieceLen);

/// First min(|seq|, max_len) tokens.
TokenSeq truncate(std::span<const TokenId> seq, std::size_t max_len);

/// Last min(|seq|, max_len) tokens.
TokenSeq keep_last(std::span<const TokenId> seq, std::size_t max_len);

}  // namespace seqpt::text
