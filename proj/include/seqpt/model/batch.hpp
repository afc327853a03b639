#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "seqpt/objectives/objectives.hpp"
#include "seqpt/text/bpe.hpp"

namespace seqpt::model {

using text::TokenId;
using text::TokenSeq;

struct SeqPair {
  TokenSeq source;
  TokenSeq target;
};

/// Padded teacher-forcing batch, row-major [example][position]. Decoder
/// input is BOS + target, labels are target + EOS, so they are offset by
/// exactly one position. Padding is always a suffix.
struct Batch {
  std::size_t size = 0;
  std::size_t source_len = 0;
  std::size_t target_len = 0;
  std::vector<TokenId> source;
  std::vector<std::uint8_t> source_mask;
  std::vector<TokenId> decoder_input;
  std::vector<TokenId> labels;
  std::vector<std::uint8_t> label_mask;

  std::span<const TokenId> source_row(std::size_t b) const {
    return std::span(source).subspan(b * source_len, source_len);
  }
  std::span<const TokenId> decoder_row(std::size_t b) const {
    return std::span(decoder_input).subspan(b * target_len, target_len);
  }
  std::span<const TokenId> label_row(std::size_t b) const {
    return std::span(labels).subspan(b * target_len, target_len);
  }
  std::size_t live_source(std::size_t b) const;
  /// One past the last live label position.
  std::size_t live_target(std::size_t b) const;
  std::size_t live_labels() const;
};

Batch make_batch(std::span<const SeqPair> pairs);
Batch make_batch(std::span<const objectives::PretrainExample> examples);

/// Checks sizes and token ranges against a vocabulary size; throws ShapeMismatch.
void validate_batch(const Batch& batch, std::size_t vocab_size, std::size_t max_positions);

}  // namespace seqpt::model
