#include "seqpt/decoding/tuning.hpp"

#include <algorithm>
#include <thread>

#include "seqpt/error.hpp"

namespace seqpt::decoding {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\n\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\n\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

template <typename T>
std::vector<Decoded> decode_corpus(const model::Seq2SeqParams<T>& params,
                                   const model::ModelConfig& config,
                                   const text::Vocabulary& vocab,
                                   const std::vector<TokenSeq>& sources, const DecodeConfig& cfg,
                                   std::size_t workers) {
  cfg.validate();
  std::vector<Decoded> out(sources.size());
  auto run = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < sources.size(); i += stride) {
      const auto h = beam_search(params, config, sources[i], cfg);
      out[i] = {trim(vocab.decode(h.content())), h.log_prob, h.finished};
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(sources.size(), 1));
  if (workers == 1) {
    run(0, 1);
    return out;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w, workers);
  pool.clear();
  return out;
}

template <typename T>
double decode_and_score(const model::Seq2SeqParams<T>& params, const model::ModelConfig& config,
                        const text::Vocabulary& vocab, const std::vector<EvalItem>& items,
                        const DecodeConfig& cfg, std::size_t workers) {
  if (items.empty()) throw EmptyDataset("no evaluation items");
  std::vector<TokenSeq> sources;
  sources.reserve(items.size());
  for (const auto& item : items) sources.push_back(item.source);
  const auto decoded = decode_corpus(params, config, vocab, sources, cfg, workers);
  std::vector<rouge::TextPair> pairs;
  pairs.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    pairs.push_back({decoded[i].text, items[i].reference});
  }
  return rouge::score_corpus(pairs, rouge::Variant::kRougeL, rouge::Protocol::kFullLengthF1).f1;
}

template <typename T>
MinLenResult tune_min_length(const model::Seq2SeqParams<T>& params,
                             const model::ModelConfig& config, const text::Vocabulary& vocab,
                             const std::vector<EvalItem>& items, std::size_t lo, std::size_t hi,
                             std::size_t step, const DecodeConfig& base, std::size_t workers) {
  if (lo > hi) throw InvalidArgument("min-length range is empty");
  if (step < 1) throw InvalidArgument("step must be >= 1");
  MinLenResult result;
  double best = -1.0;
  for (std::size_t m = lo; m <= hi; m += step) {
    DecodeConfig cfg = base;
    cfg.min_len = m;
    cfg.max_len = std::max(cfg.max_len, m);
    const double r = decode_and_score(params, config, vocab, items, cfg, workers);
    result.table.push_back({m, r});
    if (r > best) {
      best = r;
      result.best = m;
    }
  }
  return result;
}

std::vector<std::size_t> default_sweep_beams() { return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}; }

template <typename T>
std::vector<ScoreRow> beam_sweep(const model::Seq2SeqParams<T>& params,
                                 const model::ModelConfig& config, const text::Vocabulary& vocab,
                                 const std::vector<EvalItem>& items,
                                 const std::vector<std::size_t>& beams, const DecodeConfig& base,
                                 std::size_t workers) {
  if (beams.empty()) throw InvalidArgument("no beam sizes given");
  std::vector<ScoreRow> rows;
  for (std::size_t b : beams) {
    DecodeConfig cfg = base;
    cfg.beam_size = b;
    rows.push_back({b, decode_and_score(params, config, vocab, items, cfg, workers)});
  }
  return rows;
}

nlohmann::json min_len_table_json(const MinLenResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.table) rows.push_back({{"min_len", r.value}, {"rouge_l", r.rouge_l}});
  return {{"best_min_len", result.best}, {"rows", rows}};
}

nlohmann::json beam_table_json(const std::vector<ScoreRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) out.push_back({{"beam", r.value}, {"rouge_l", r.rouge_l}});
  return {{"rows", out}};
}

#define SEQPT_INSTANTIATE(T)                                                                    \
  template std::vector<Decoded> decode_corpus(const model::Seq2SeqParams<T>&,                   \
                                              const model::ModelConfig&, const text::Vocabulary&, \
                                              const std::vector<TokenSeq>&, const DecodeConfig&, \
                                              std::size_t);                                     \
  template double decode_and_score(const model::Seq2SeqParams<T>&, const model::ModelConfig&,  \
                                   const text::Vocabulary&, const std::vector<EvalItem>&,       \
                                   const DecodeConfig&, std::size_t);                           \
  template MinLenResult tune_min_length(const model::Seq2SeqParams<T>&,                         \
                                        const model::ModelConfig&, const text::Vocabulary&,     \
                                        const std::vector<EvalItem>&, std::size_t, std::size_t, \
                                        std::size_t, const DecodeConfig&, std::size_t);         \
  template std::vector<ScoreRow> beam_sweep(const model::Seq2SeqParams<T>&,                     \
                                            const model::ModelConfig&, const text::Vocabulary&, \
                                            const std::vector<EvalItem>&,                       \
                                            const std::vector<std::size_t>&, const DecodeConfig&, \
                                            std::size_t);

SEQPT_INSTANTIATE(float)
SEQPT_INSTANTIATE(double)

}  // namespace seqpt::decoding
