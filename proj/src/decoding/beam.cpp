#include "seqpt/decoding/beam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "seqpt/error.hpp"
#include "seqpt/model/transformer.hpp"

namespace seqpt::decoding {

void DecodeConfig::validate() const {
  if (beam_size < 1) throw InvalidArgument("beam_size must be >= 1");
  if (min_len < 1 || min_len > max_len) throw InvalidArgument("need 1 <= min_len <= max_len");
}

TokenSeq BeamHypothesis::content() const {
  auto begin = tokens.begin();
  auto end = tokens.end();
  if (begin != end) ++begin;  // BOS
  if (finished && end != begin) --end;
  return TokenSeq(begin, end);
}

bool trigram_allowed(std::span<const TokenId> tokens, TokenId candidate) {
  const std::size_t n = tokens.size();
  if (n < 2) return true;
  const TokenId a = tokens[n - 2], b = tokens[n - 1];
  for (std::size_t i = 0; i + 2 < n; ++i) {
    if (tokens[i] == a && tokens[i + 1] == b && tokens[i + 2] == candidate) return false;
  }
  return true;
}

namespace {

struct Candidate {
  double score;
  TokenId token;
  std::size_t hyp;
};

bool ranks_before(const Candidate& x, const Candidate& y) {
  if (x.score != y.score) return x.score > y.score;
  if (x.token != y.token) return x.token < y.token;
  return x.hyp < y.hyp;
}

// Appends the admissible expansions of one hypothesis.
template <typename T>
void expand(const BeamHypothesis& h, std::size_t index, const model::Matrix<T>& log_probs,
            const DecodeConfig& cfg, std::vector<Candidate>& out) {
  const std::size_t generated = h.tokens.size() - 1;
  for (Eigen::Index v = 0; v < log_probs.cols(); ++v) {
    const auto token = static_cast<TokenId>(v);
    if (std::find(cfg.banned.begin(), cfg.banned.end(), token) != cfg.banned.end()) continue;
    if (token == cfg.eos && generated < cfg.min_len) continue;
    if (cfg.block_repeated_trigrams && !trigram_allowed(h.tokens, token)) continue;
    const double lp = static_cast<double>(log_probs(0, v));
    if (!std::isfinite(lp)) continue;
    out.push_back({h.log_prob + lp, token, index});
  }
}

const BeamHypothesis& best_of(const std::vector<BeamHypothesis>& hyps) {
  const BeamHypothesis* best = &hyps.front();
  for (const auto& h : hyps) {
    if (h.log_prob > best->log_prob) best = &h;
  }
  return *best;
}

}  // namespace

template <typename T>
BeamHypothesis beam_search(const model::Seq2SeqParams<T>& params,
                           const model::ModelConfig& config, std::span<const TokenId> source,
                           const DecodeConfig& cfg) {
  cfg.validate();
  if (source.empty()) throw InvalidArgument("cannot decode an empty source");
  const auto memory = model::encode_source(params, config, source);

  std::vector<BeamHypothesis> live{{{cfg.bos}, 0.0, false}};
  std::vector<BeamHypothesis> finished;
  std::vector<Candidate> candidates;
  for (std::size_t step = 1; step <= cfg.max_len && !live.empty(); ++step) {
    candidates.clear();
    for (std::size_t i = 0; i < live.size(); ++i) {
      expand(live[i], i, model::next_token_log_probs(params, config, memory, live[i].tokens), cfg,
             candidates);
    }
    // Each hypothesis contributes at most one EOS, so this prefix always
    // holds enough non-EOS candidates to refill the beam.
    const std::size_t keep = std::min(candidates.size(), cfg.beam_size + live.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), ranks_before);

    std::vector<BeamHypothesis> next;
    for (std::size_t c = 0; c < keep && next.size() < cfg.beam_size; ++c) {
      const auto& cand = candidates[c];
      BeamHypothesis h{live[cand.hyp].tokens, cand.score, cand.token == cfg.eos};
      h.tokens.push_back(cand.token);
      (h.finished ? finished : next).push_back(std::move(h));
    }
    live = std::move(next);
    if (finished.size() >= cfg.beam_size) break;
  }
  if (!finished.empty()) return best_of(finished);
  if (live.empty()) return {{cfg.bos}, 0.0, false};
  return best_of(live);
}

template <typename T>
BeamHypothesis greedy_decode(const model::Seq2SeqParams<T>& params,
                             const model::ModelConfig& config, std::span<const TokenId> source,
                             const DecodeConfig& cfg) {
  cfg.validate();
  if (source.empty()) throw InvalidArgument("cannot decode an empty source");
  const auto memory = model::encode_source(params, config, source);
  BeamHypothesis h{{cfg.bos}, 0.0, false};
  std::vector<Candidate> candidates;
  for (std::size_t step = 1; step <= cfg.max_len; ++step) {
    candidates.clear();
    expand(h, 0, model::next_token_log_probs(params, config, memory, h.tokens), cfg, candidates);
    if (candidates.empty()) break;
    const auto best = *std::min_element(candidates.begin(), candidates.end(), ranks_before);
    h.tokens.push_back(best.token);
    h.log_prob = best.score;
    if (best.token == cfg.eos) {
      h.finished = true;
      break;
    }
  }
  return h;
}

template <typename T>
double sequence_log_prob(const model::Seq2SeqParams<T>& params, const model::ModelConfig& config,
                         std::span<const TokenId> source, std::span<const TokenId> tokens) {
  const auto memory = model::encode_source(params, config, source);
  double total = 0.0;
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    const auto lp = model::next_token_log_probs(params, config, memory, tokens.first(t));
    total += static_cast<double>(lp(0, tokens[t]));
  }
  return total;
}

template BeamHypothesis beam_search(const model::Seq2SeqParams<float>&, const model::ModelConfig&,
                                    std::span<const TokenId>, const DecodeConfig&);
template BeamHypothesis beam_search(const model::Seq2SeqParams<double>&,
                                    const model::ModelConfig&, std::span<const TokenId>,
                                    const DecodeConfig&);
template BeamHypothesis greedy_decode(const model::Seq2SeqParams<float>&,
                                      const model::ModelConfig&, std::span<const TokenId>,
                                      const DecodeConfig&);
template BeamHypothesis greedy_decode(const model::Seq2SeqParams<double>&,
                                      const model::ModelConfig&, std::span<const TokenId>,
                                      const DecodeConfig&);
template double sequence_log_prob(const model::Seq2SeqParams<float>&, const model::ModelConfig&,
                                  std::span<const TokenId>, std::span<const TokenId>);
template double sequence_log_prob(const model::Seq2SeqParams<double>&, const model::ModelConfig&,
                                  std::span<const TokenId>, std::span<const TokenId>);

}  // namespace seqpt::decoding
