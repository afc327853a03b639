#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"
#include "seqpt/model/config.hpp"
#include "seqpt/model/params.hpp"
#include "seqpt/text/bpe.hpp"

namespace seqpt::decoding {

using text::TokenId;
using text::TokenSeq;

struct DecodeConfig {
  std::size_t beam_size = 5;
  /// Generated tokens required before EOS may be chosen.
  std::size_t min_len = 1;
  /// Cap on generated tokens, EOS included.
  std::size_t max_len = 256;
  bool block_repeated_trigrams = true;
  TokenId bos = text::special::kBos;
  TokenId eos = text::special::kEos;
  /// Ids that are never generated.
  std::vector<TokenId> banned = {text::special::kPad, text::special::kBos, text::special::kMask};

  void validate() const;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DecodeConfig, beam_size, min_len, max_len,
                                                block_repeated_trigrams, bos, eos, banned)

struct BeamHypothesis {
  TokenSeq tokens;  // BOS-prefixed
  double log_prob = 0.0;
  bool finished = false;

  /// Tokens between BOS and EOS.
  TokenSeq content() const;
};

/// False iff appending `candidate` repeats a trigram already in `tokens`.
bool trigram_allowed(std::span<const TokenId> tokens, TokenId candidate);
inline bool trigram_allowed(const BeamHypothesis& h, TokenId candidate) {
  return trigram_allowed(h.tokens, candidate);
}

/// Beam search ranked by raw cumulative log-probability. Ties go to the lower
/// token id, then the earlier hypothesis. Hypotheses that emit EOS are set
/// aside; search stops once `beam_size` are finished or `max_len` is hit.
/// Returns the best finished hypothesis, or the best unfinished one if none
/// finished.
template <typename T>
BeamHypothesis beam_search(const model::Seq2SeqParams<T>& params,
                           const model::ModelConfig& config, std::span<const TokenId> source,
                           const DecodeConfig& cfg);

/// Argmax decoding under the same constraints (lowest id wins ties).
template <typename T>
BeamHypothesis greedy_decode(const model::Seq2SeqParams<T>& params,
                             const model::ModelConfig& config, std::span<const TokenId> source,
                             const DecodeConfig& cfg);

/// Teacher-forced log-probability of `tokens` (BOS-prefixed) given `source`.
template <typename T>
double sequence_log_prob(const model::Seq2SeqParams<T>& params, const model::ModelConfig& config,
                         std::span<const TokenId> source, std::span<const TokenId> tokens);

}  // namespace seqpt::decoding
