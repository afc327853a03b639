#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "seqpt/decoding/beam.hpp"
#include "seqpt/rouge/rouge.hpp"

namespace seqpt::decoding {

/// A tokenized source and the reference summary it is scored against.
struct EvalItem {
  TokenSeq source;
  std::string reference;
};

struct Decoded {
  std::string text;
  double log_prob = 0.0;
  bool finished = false;
};

/// Decodes every source. `workers` > 1 spreads sources over threads; the
/// result does not depend on the worker count.
template <typename T>
std::vector<Decoded> decode_corpus(const model::Seq2SeqParams<T>& params,
                                   const model::ModelConfig& config,
                                   const text::Vocabulary& vocab,
                                   const std::vector<TokenSeq>& sources, const DecodeConfig& cfg,
                                   std::size_t workers = 1);

/// Corpus ROUGE-L F1 (in [0,1]) of the decodes against their references.
template <typename T>
double decode_and_score(const model::Seq2SeqParams<T>& params, const model::ModelConfig& config,
                        const text::Vocabulary& vocab, const std::vector<EvalItem>& items,
                        const DecodeConfig& cfg, std::size_t workers = 1);

struct ScoreRow {
  std::size_t value = 0;  // min_len or beam size
  double rouge_l = 0.0;
};

struct MinLenResult {
  std::size_t best = 0;
  std::vector<ScoreRow> table;
};

/// Tries min_len in {lo, lo+step, ..., <= hi}; ties keep the smaller value.
template <typename T>
MinLenResult tune_min_length(const model::Seq2SeqParams<T>& params,
                             const model::ModelConfig& config, const text::Vocabulary& vocab,
                             const std::vector<EvalItem>& items, std::size_t lo = 30,
                             std::size_t hi = 80, std::size_t step = 5,
                             const DecodeConfig& base = {}, std::size_t workers = 1);

std::vector<std::size_t> default_sweep_beams();  // 1..10

template <typename T>
std::vector<ScoreRow> beam_sweep(const model::Seq2SeqParams<T>& params,
                                 const model::ModelConfig& config, const text::Vocabulary& vocab,
                                 const std::vector<EvalItem>& items,
                                 const std::vector<std::size_t>& beams = default_sweep_beams(),
                                 const DecodeConfig& base = {}, std::size_t workers = 1);

nlohmann::json min_len_table_json(const MinLenResult& result);
nlohmann::json beam_table_json(const std::vector<ScoreRow>& rows);

}  // namespace seqpt::decoding
