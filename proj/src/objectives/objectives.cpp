#include "seqpt/objectives/objectives.hpp"

#include <cmath>
#include <numeric>

#include "seqpt/error.hpp"

namespace seqpt::objectives {

std::string_view to_string(Objective objective) {
  switch (objective) {
    case Objective::kSentenceReorder: return "sr";
    case Objective::kNextSegment: return "nsg";
    case Objective::kMaskedDocument: return "mdg";
  }
  return "?";
}

Objective parse_objective(std::string_view name) {
  if (name == "sr") return Objective::kSentenceReorder;
  if (name == "nsg") return Objective::kNextSegment;
  if (name == "mdg") return Objective::kMaskedDocument;
  throw InvalidArgument("unknown objective: " + std::string(name));
}

void MaskPolicy::validate() const {
  if (p_mask < 0 || p_random < 0 || p_keep < 0 ||
      std::abs(p_mask + p_random + p_keep - 1.0) > 1e-9) {
    throw InvalidArgument("mask policy probabilities must be non-negative and sum to 1");
  }
}

void SpanParams::validate() const {
  if (min_len < 1 || min_len > max_len) throw InvalidArgument("span bounds need 1 <= a <= b");
}

PretrainExample sentence_reorder(std::span<const TokenSeq> sentences, Rng& rng,
                                 const TransformLimits& limits) {
  if (sentences.empty()) throw EmptyDocument("sentence reordering needs at least one sentence");
  std::vector<std::size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), std::size_t{1});
  rng.shuffle(std::span(order));

  TokenSeq input, target;
  for (std::size_t idx : order) {
    const auto& s = sentences[idx - 1];
    input.insert(input.end(), s.begin(), s.end());
  }
  for (const auto& s : sentences) target.insert(target.end(), s.begin(), s.end());
  if (target.empty()) throw EmptyDocument("sentence reordering needs at least one token");

  PretrainExample ex;
  ex.objective = Objective::kSentenceReorder;
  ex.input = text::truncate(input, limits.max_input);
  ex.target = text::truncate(target, limits.max_target);
  ex.meta = ReorderMeta{std::move(order)};
  return ex;
}

PretrainExample next_segment_at(std::span<const TokenId> seq, std::size_t split,
                                std::size_t target_len, const TransformLimits& limits) {
  if (seq.size() < 2) throw TooShort("next segment generation needs at least 2 tokens");
  if (split < 1 || split >= seq.size()) throw InvalidArgument("split point out of range");
  if (target_len < 1) throw InvalidArgument("target_len must be >= 1");
  PretrainExample ex;
  ex.objective = Objective::kNextSegment;
  ex.input = text::keep_last(seq.first(split), limits.max_input);
  const auto rest = seq.subspan(split);
  ex.target = text::truncate(rest, std::min(target_len, limits.max_target));
  ex.meta = NextSegmentMeta{split};
  return ex;
}

PretrainExample next_segment_split(std::span<const TokenId> seq, Rng& rng,
                                   std::size_t target_len, const TransformLimits& limits) {
  if (seq.size() < 2) throw TooShort("next segment generation needs at least 2 tokens");
  const auto split =
      static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(seq.size()) - 1));
  return next_segment_at(seq, split, target_len, limits);
}

PretrainExample mask_document(std::span<const TokenId> piece, const SpanParams& span,
                              const MaskPolicy& policy, Rng& rng,
                              const text::Vocabulary& vocab, const TransformLimits& limits) {
  span.validate();
  policy.validate();
  if (piece.size() < span.min_len) {
    throw TooShort("piece shorter than the minimum span length");
  }
  if (vocab.size() <= static_cast<std::size_t>(text::special::kCount)) {
    throw InvalidArgument("vocabulary has no regular tokens");
  }
  const auto n = static_cast<std::int64_t>(piece.size());
  const auto hi = static_cast<std::int64_t>(std::min(span.max_len, piece.size()));
  const auto length = rng.uniform_int(static_cast<std::int64_t>(span.min_len), hi);
  const auto start = rng.uniform_int(1, n - length + 1);

  TokenSeq corrupted(piece.begin(), piece.end());
  MaskMeta meta{static_cast<std::size_t>(start), static_cast<std::size_t>(length), {}};
  meta.actions.reserve(meta.length);
  const auto last_id = static_cast<std::int64_t>(vocab.size()) - 1;
  for (std::int64_t pos = start - 1; pos < start - 1 + length; ++pos) {
    const double u = rng.uniform();
    if (u < policy.p_mask) {
      corrupted[pos] = text::special::kMask;
      meta.actions.push_back(MaskAction::kMask);
    } else if (u < policy.p_mask + policy.p_random) {
      corrupted[pos] = static_cast<TokenId>(rng.uniform_int(text::special::kCount, last_id));
      meta.actions.push_back(MaskAction::kRandom);
    } else {
      meta.actions.push_back(MaskAction::kKeep);
    }
  }

  PretrainExample ex;
  ex.objective = Objective::kMaskedDocument;
  ex.input = text::truncate(corrupted, limits.max_input);
  ex.target = text::truncate(piece, limits.max_target);
  ex.meta = std::move(meta);
  return ex;
}

TokenSeq PieceContext::flat() const {
  TokenSeq out;
  out.reserve(length());
  for (const auto& s : sentences) out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::size_t PieceContext::length() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

bool feasible(Objective objective, const PieceContext& piece, const ObjectiveConfig& cfg) {
  switch (objective) {
    case Objective::kSentenceReorder:
      return !piece.sentences.empty() && piece.length() >= 1;
    case Objective::kNextSegment:
      // Needs text after the piece to predict.
      return !piece.following.empty() && piece.length() >= 1;
    case Objective::kMaskedDocument:
      return piece.length() >= cfg.span.min_len;
  }
  return false;
}

PretrainExample apply_objective(Objective objective, const PieceContext& piece, Rng& rng,
                                const text::Vocabulary& vocab, const ObjectiveConfig& cfg) {
  PretrainExample ex;
  switch (objective) {
    case Objective::kSentenceReorder:
      ex = sentence_reorder(piece.sentences, rng, cfg.limits);
      break;
    case Objective::kNextSegment: {
      if (piece.following.empty()) throw TooShort("no text follows the piece");
      TokenSeq seq = piece.flat();
      const std::size_t boundary = seq.size();
      seq.insert(seq.end(), piece.following.begin(), piece.following.end());
      ex = cfg.split_mode == SplitMode::kRandom
               ? next_segment_split(seq, rng, cfg.target_len, cfg.limits)
               : next_segment_at(seq, boundary, cfg.target_len, cfg.limits);
      break;
    }
    case Objective::kMaskedDocument:
      ex = mask_document(piece.flat(), cfg.span, cfg.policy, rng, vocab, cfg.limits);
      break;
  }
  ex.id = piece.id;
  return ex;
}

Objective draw_objective(const PieceContext& piece, Rng& rng, const ObjectiveConfig& cfg) {
  std::vector<Objective> ok;
  for (auto o : kAllObjectives) {
    if (feasible(o, piece, cfg)) ok.push_back(o);
  }
  if (ok.empty()) throw NoFeasibleObjective("piece " + piece.id + " fits no objective");
  const auto drawn = kAllObjectives[rng.uniform_int(0, 2)];
  if (feasible(drawn, piece, cfg)) return drawn;
  return ok[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(ok.size()) - 1))];
}

PretrainExample mix_all(const PieceContext& piece, Rng& rng, const text::Vocabulary& vocab,
                        const ObjectiveConfig& cfg) {
  return apply_objective(draw_objective(piece, rng, cfg), piece, rng, vocab, cfg);
}

}  // namespace seqpt::objectives
