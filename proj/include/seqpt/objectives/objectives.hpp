#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "seqpt/objectives/rng.hpp"
#include "seqpt/text/bpe.hpp"
#include "seqpt/text/pieces.hpp"

namespace seqpt::objectives {

using text::TokenId;
using text::TokenSeq;

enum class Objective { kSentenceReorder, kNextSegment, kMaskedDocument };

std::string_view to_string(Objective objective);
Objective parse_objective(std::string_view name);
inline constexpr Objective kAllObjectives[] = {
    Objective::kSentenceReorder, Objective::kNextSegment, Objective::kMaskedDocument};

/// Per-position treatment inside the masked span.
struct MaskPolicy {
  double p_mask = 0.8;
  double p_random = 0.1;
  double p_keep = 0.1;
  void validate() const;
};

/// Inclusive bounds of the masked span length.
struct SpanParams {
  std::size_t min_len = 100;
  std::size_t max_len = 256;
  void validate() const;
};

/// Post-transform truncation of model input and target.
struct TransformLimits {
  std::size_t max_input = text::kMaxSourceLen;
  std::size_t max_target = text::kMaxTargetLen;
};

enum class MaskAction : char { kMask = 'M', kRandom = 'R', kKeep = 'K' };

struct ReorderMeta {
  std::vector<std::size_t> order;  // 1-based sentence indices, in input order
};
struct NextSegmentMeta {
  std::size_t split = 0;  // number of source tokens before the split point
};
struct MaskMeta {
  std::size_t start = 0;  // 1-based first masked position
  std::size_t length = 0;
  std::vector<MaskAction> actions;  // one per span position
};
using ExampleMeta = std::variant<ReorderMeta, NextSegmentMeta, MaskMeta>;

struct PretrainExample {
  std::string id;
  Objective objective = Objective::kSentenceReorder;
  TokenSeq input;
  TokenSeq target;
  ExampleMeta meta;
};

/// Shuffles whole sentences with a uniformly random permutation (the identity
/// included). The target is the sentences in their original order.
PretrainExample sentence_reorder(std::span<const TokenSeq> sentences, Rng& rng,
                                 const TransformLimits& limits = {});

/// Splits at a uniformly drawn point in [1, |seq|-1]; the input keeps the last
/// `limits.max_input` tokens before the split, the target the next
/// `target_len` tokens after it.
PretrainExample next_segment_split(std::span<const TokenId> seq, Rng& rng,
                                   std::size_t target_len = text::kMaxTargetLen,
                                   const TransformLimits& limits = {});

/// Same as next_segment_split with a caller-chosen split point.
PretrainExample next_segment_at(std::span<const TokenId> seq, std::size_t split,
                                std::size_t target_len = text::kMaxTargetLen,
                                const TransformLimits& limits = {});

/// Corrupts one contiguous span. Span length l ~ U(a, min(b, |piece|)),
/// start k ~ U(1, |piece|-l+1); every span position independently becomes
/// [MASK], a uniformly drawn non-special token, or stays as is. The target is
/// the full original piece.
PretrainExample mask_document(std::span<const TokenId> piece, const SpanParams& span,
                              const MaskPolicy& policy, Rng& rng,
                              const text::Vocabulary& vocab,
                              const TransformLimits& limits = {});

/// A pre-training unit: a piece split at sentence boundaries (edge fragments
/// count as sentences), plus the tokens that follow it in the document.
struct PieceContext {
  std::string id;
  std::vector<TokenSeq> sentences;
  TokenSeq following;

  TokenSeq flat() const;
  std::size_t length() const;
};

enum class SplitMode { kRandom, kPieceBoundary };

struct ObjectiveConfig {
  SpanParams span;
  MaskPolicy policy;
  std::size_t target_len = text::kMaxTargetLen;
  SplitMode split_mode = SplitMode::kRandom;
  TransformLimits limits;
};

bool feasible(Objective objective, const PieceContext& piece, const ObjectiveConfig& cfg);

PretrainExample apply_objective(Objective objective, const PieceContext& piece, Rng& rng,
                                const text::Vocabulary& vocab, const ObjectiveConfig& cfg);

/// Uniform draw over the three objectives; an infeasible draw is replaced by a
/// uniform draw over the feasible ones.
Objective draw_objective(const PieceContext& piece, Rng& rng, const ObjectiveConfig& cfg);

PretrainExample mix_all(const PieceContext& piece, Rng& rng, const text::Vocabulary& vocab,
                        const ObjectiveConfig& cfg);

}  // namespace seqpt::objectives
