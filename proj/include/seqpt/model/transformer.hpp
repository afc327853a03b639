#pragma once

#include <span>
#include <vector>

#include "seqpt/model/batch.hpp"
#include "seqpt/model/config.hpp"
#include "seqpt/model/params.hpp"
#include "seqpt/objectives/rng.hpp"

namespace seqpt::model {

template <typename T>
using ColVector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
struct LayerNormCache {
  Matrix<T> normalized;
  ColVector<T> inv_std;
};

template <typename T>
struct AttentionCache {
  Matrix<T> query_in, memory_in;
  Matrix<T> q, k, v;
  std::vector<Matrix<T>> probs;  // one (query x key) matrix per head
  Matrix<T> context;
};

template <typename T>
struct FeedForwardCache {
  Matrix<T> input, pre_activation, activation;
};

/// Empty matrix means dropout was not applied at that site.
template <typename T>
struct EncoderLayerCache {
  LayerNormCache<T> norm_attn;
  AttentionCache<T> self_attn;
  Matrix<T> drop_attn;
  LayerNormCache<T> norm_ffn;
  FeedForwardCache<T> ffn;
  Matrix<T> drop_ffn;
};

template <typename T>
struct DecoderLayerCache {
  LayerNormCache<T> norm_self;
  AttentionCache<T> self_attn;
  Matrix<T> drop_self;
  LayerNormCache<T> norm_cross;
  AttentionCache<T> cross_attn;
  Matrix<T> drop_cross;
  LayerNormCache<T> norm_ffn;
  FeedForwardCache<T> ffn;
  Matrix<T> drop_ffn;
};

template <typename T>
struct ExampleCache {
  std::vector<TokenId> source;         // live source tokens
  std::vector<TokenId> decoder_input;  // live decoder positions
  Matrix<T> drop_source_embedding, drop_target_embedding;
  std::vector<EncoderLayerCache<T>> encoder;
  LayerNormCache<T> encoder_norm;
  Matrix<T> memory;  // final encoder states
  std::vector<DecoderLayerCache<T>> decoder;
  LayerNormCache<T> decoder_norm;
  Matrix<T> hidden;  // final decoder states
};

template <typename T>
struct ForwardResult {
  /// One (target_len x vocab_size) matrix per example; rows past the last
  /// live label are zero.
  std::vector<Matrix<T>> logits;
  std::vector<ExampleCache<T>> cache;
};

/// Teacher-forced forward pass. Dropout is applied only when `dropout_rng`
/// is given; the masks are recorded in the cache.
template <typename T>
ForwardResult<T> forward(const Seq2SeqParams<T>& params, const ModelConfig& config,
                         const Batch& batch, Rng* dropout_rng = nullptr);

template <typename T>
struct LossResult {
  double value = 0.0;  // mean NLL over live label positions
  double total_nll = 0.0;
  std::size_t live = 0;
  std::vector<Matrix<T>> dlogits;  // gradient of `value`
};

/// Throws AllPadded when no label position is live.
template <typename T>
LossResult<T> loss(const std::vector<Matrix<T>>& logits, const Batch& batch,
                   bool with_gradient = true);

/// Exact reverse-mode gradient of the mean loss.
template <typename T>
Seq2SeqParams<T> backward(const Seq2SeqParams<T>& params, const ModelConfig& config,
                          const Batch& batch, const std::vector<ExampleCache<T>>& cache,
                          const std::vector<Matrix<T>>& dlogits);

template <typename T>
double loss_and_gradient(const Seq2SeqParams<T>& params, const ModelConfig& config,
                         const Batch& batch, Seq2SeqParams<T>& grads,
                         Rng* dropout_rng = nullptr);

template <typename T>
double loss_only(const Seq2SeqParams<T>& params, const ModelConfig& config, const Batch& batch);

/// Final encoder states for one source sequence (inference, no dropout).
template <typename T>
Matrix<T> encode_source(const Seq2SeqParams<T>& params, const ModelConfig& config,
                        std::span<const TokenId> source);

/// Log-probabilities (1 x vocab) of the token following `prefix`
/// (BOS-prefixed) given encoded memory.
template <typename T>
Matrix<T> next_token_log_probs(const Seq2SeqParams<T>& params, const ModelConfig& config,
                               const Matrix<T>& memory, std::span<const TokenId> prefix);

}  // namespace seqpt::model
