// Independent reference computations shared by the unit and acceptance tests.
// Nothing here calls the code it is used to check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "seqpt/model/batch.hpp"
#include "seqpt/model/transformer.hpp"
#include "seqpt/objectives/objectives.hpp"
#include "seqpt/text/bpe.hpp"

namespace oracle {

using seqpt::objectives::MaskAction;
using seqpt::objectives::MaskMeta;
using seqpt::objectives::NextSegmentMeta;
using seqpt::objectives::PretrainExample;
using seqpt::objectives::ReorderMeta;
using seqpt::objectives::SpanParams;
using seqpt::objectives::TransformLimits;
using seqpt::text::TokenId;
using seqpt::text::TokenSeq;

inline TokenSeq first_n(const TokenSeq& s, std::size_t n) {
  return TokenSeq(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(std::min(n, s.size())));
}

inline TokenSeq last_n(const TokenSeq& s, std::size_t n) {
  return TokenSeq(s.end() - static_cast<std::ptrdiff_t>(std::min(n, s.size())), s.end());
}

/// Returns an empty string when every SR invariant holds, else a description.
inline std::string check_sr(const PretrainExample& ex, const std::vector<TokenSeq>& sentences,
                            const TransformLimits& limits) {
  const auto* meta = std::get_if<ReorderMeta>(&ex.meta);
  if (meta == nullptr) return "meta is not SR";
  const std::size_t m = sentences.size();
  std::vector<std::size_t> sorted = meta->order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < m; ++i) {
    if (sorted.size() != m || sorted[i] != i + 1) return "order is not a permutation of 1..m";
  }
  TokenSeq input, target;
  for (std::size_t idx : meta->order) input.insert(input.end(), sentences[idx - 1].begin(), sentences[idx - 1].end());
  for (const auto& s : sentences) target.insert(target.end(), s.begin(), s.end());
  std::multiset<TokenId> a(input.begin(), input.end()), b(target.begin(), target.end());
  if (a != b) return "token multisets differ";
  // Undo the permutation on the produced input, chunk by chunk.
  if (ex.input.size() == input.size()) {
    std::vector<TokenSeq> restored(m);
    std::size_t off = 0;
    for (std::size_t idx : meta->order) {
      const auto len = static_cast<std::ptrdiff_t>(sentences[idx - 1].size());
      restored[idx - 1].assign(ex.input.begin() + static_cast<std::ptrdiff_t>(off),
                               ex.input.begin() + static_cast<std::ptrdiff_t>(off) + len);
      off += sentences[idx - 1].size();
    }
    TokenSeq rebuilt;
    for (const auto& s : restored) rebuilt.insert(rebuilt.end(), s.begin(), s.end());
    if (rebuilt != target) return "inverse permutation does not restore target";
  }
  if (ex.input != first_n(input, limits.max_input)) return "input is not the permuted concatenation";
  if (ex.target != first_n(target, limits.max_target)) return "target is not the original concatenation";
  if (ex.input.empty() || ex.target.empty()) return "empty side";
  return {};
}

inline std::string check_nsg(const PretrainExample& ex, const TokenSeq& seq, std::size_t target_len,
                             const TransformLimits& limits) {
  const auto* meta = std::get_if<NextSegmentMeta>(&ex.meta);
  if (meta == nullptr) return "meta is not NSG";
  const std::size_t k = meta->split;
  if (k < 1 || k > seq.size() - 1) return "split out of [1, |seq|-1]";
  const TokenSeq before(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(k));
  const TokenSeq after(seq.begin() + static_cast<std::ptrdiff_t>(k), seq.end());
  if (ex.input != last_n(before, limits.max_input)) return "input is not the tokens before the split";
  if (ex.target != first_n(after, std::min(target_len, limits.max_target))) {
    return "target is not the tokens after the split";
  }
  // input || target must occur contiguously in seq.
  TokenSeq joined = ex.input;
  joined.insert(joined.end(), ex.target.begin(), ex.target.end());
  if (std::search(seq.begin(), seq.end(), joined.begin(), joined.end()) == seq.end()) {
    return "input || target is not contiguous in the source";
  }
  return {};
}

inline std::string check_mdg(const PretrainExample& ex, const TokenSeq& piece, const SpanParams& span,
                             const seqpt::text::Vocabulary& vocab, const TransformLimits& limits) {
  const auto* meta = std::get_if<MaskMeta>(&ex.meta);
  if (meta == nullptr) return "meta is not MDG";
  const std::size_t n = piece.size(), l = meta->length, k = meta->start;
  if (l < span.min_len || l > std::min(span.max_len, n)) return "span length out of bounds";
  if (k < 1 || k > n - l + 1) return "span start out of bounds";
  if (meta->actions.size() != l) return "one action per span position expected";
  if (ex.target != first_n(piece, limits.max_target)) return "target is not the original piece";
  if (ex.input.size() != std::min(n, limits.max_input)) return "input length changed";
  for (std::size_t i = 0; i < ex.input.size(); ++i) {
    const bool inside = i + 1 >= k && i + 1 < k + l;
    const TokenId got = ex.input[i];
    if (!inside) {
      if (got != piece[i]) return "position outside the span changed";
      if (got == seqpt::text::special::kMask) return "mask outside the span";
      continue;
    }
    switch (meta->actions[i + 1 - k]) {
      case MaskAction::kMask:
        if (got != seqpt::text::special::kMask) return "masked position is not [MASK]";
        break;
      case MaskAction::kRandom:
        if (seqpt::text::Vocabulary::is_special(got) || !vocab.valid(got)) {
          return "random replacement is special or invalid";
        }
        break;
      case MaskAction::kKeep:
        if (got != piece[i]) return "kept position changed";
        break;
    }
  }
  return {};
}

/// LCS length by enumerating every subsequence of `a` (|a| <= ~16).
template <typename T>
std::size_t brute_lcs(const std::vector<T>& a, const std::vector<T>& b) {
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
    const auto bits = static_cast<std::size_t>(__builtin_popcount(mask));
    if (bits <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) {
      if (!(mask & (1u << i))) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      else ++j;
    }
    if (ok) best = bits;
  }
  return best;
}

/// Textbook full-table LCS recurrence.
template <typename T>
std::size_t table_lcs(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

/// Log-probability of `target` followed by EOS given `source`, computed
/// through the batched training forward pass.
template <typename T>
double teacher_forced_log_prob(const seqpt::model::Seq2SeqParams<T>& params,
                               const seqpt::model::ModelConfig& config, const TokenSeq& source,
                               const TokenSeq& content, bool with_eos) {
  const seqpt::model::SeqPair pair{source, content};
  const auto batch = seqpt::model::make_batch(std::span<const seqpt::model::SeqPair>(&pair, 1));
  const auto fwd = seqpt::model::forward(params, config, batch, nullptr);
  const auto& logits = fwd.logits[0];
  double total = 0.0;
  const std::size_t steps = content.size() + (with_eos ? 1 : 0);
  for (std::size_t t = 0; t < steps; ++t) {
    const TokenId label = t < content.size() ? content[t] : seqpt::text::special::kEos;
    double mx = -INFINITY;
    for (Eigen::Index v = 0; v < logits.cols(); ++v) mx = std::max(mx, static_cast<double>(logits(t, v)));
    double z = 0.0;
    for (Eigen::Index v = 0; v < logits.cols(); ++v) z += std::exp(static_cast<double>(logits(t, v)) - mx);
    total += static_cast<double>(logits(t, label)) - mx - std::log(z);
  }
  return total;
}

/// Exact lr for integer step/warmup via the closed form.
inline double schedule(std::size_t step, double peak, std::size_t warmup) {
  if (step == 0) return 0.0;
  const double s = static_cast<double>(step), w = static_cast<double>(warmup);
  return step <= warmup ? peak * s / w : peak * std::sqrt(w / s);
}

}  // namespace oracle
