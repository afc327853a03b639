#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "seqpt/model/config.hpp"
#include "seqpt/objectives/rng.hpp"

namespace seqpt::model {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Biases and gains are stored as 1 x n matrices so every tensor has one type.
template <typename T>
struct LayerNormParams {
  Matrix<T> gain;
  Matrix<T> bias;
};

template <typename T>
struct AttentionParams {
  Matrix<T> wq, bq, wk, bk, wv, bv, wo, bo;
};

template <typename T>
struct FeedForwardParams {
  Matrix<T> w1, b1, w2, b2;
};

template <typename T>
struct EncoderLayerParams {
  LayerNormParams<T> norm_attn;
  AttentionParams<T> self_attn;
  LayerNormParams<T> norm_ffn;
  FeedForwardParams<T> ffn;
};

template <typename T>
struct DecoderLayerParams {
  LayerNormParams<T> norm_self;
  AttentionParams<T> self_attn;
  LayerNormParams<T> norm_cross;
  AttentionParams<T> cross_attn;
  LayerNormParams<T> norm_ffn;
  FeedForwardParams<T> ffn;
};

template <typename T>
struct Seq2SeqParams {
  /// Encoder token table; also the decoder table and output projection when tied.
  Matrix<T> token_embedding;
  Matrix<T> decoder_embedding;  // empty when tied
  Matrix<T> output_projection;  // empty when tied
  Matrix<T> encoder_positions;
  Matrix<T> decoder_positions;
  std::vector<EncoderLayerParams<T>> encoder;
  LayerNormParams<T> encoder_norm;
  std::vector<DecoderLayerParams<T>> decoder;
  LayerNormParams<T> decoder_norm;

  const Matrix<T>& decoder_table() const {
    return decoder_embedding.size() ? decoder_embedding : token_embedding;
  }
  const Matrix<T>& output_table() const {
    return output_projection.size() ? output_projection : token_embedding;
  }
};

/// Optimizer groups; each has its own Adam schedule.
enum class ParamGroup { kEncoder, kDecoder };

template <typename T>
struct TensorRef {
  std::string name;
  ParamGroup group;
  Matrix<T>* value;
};

/// Every non-empty tensor in declaration order. The shared token table is an
/// encoder-group tensor.
template <typename T>
std::vector<TensorRef<T>> tensors(Seq2SeqParams<T>& params);

template <typename T>
Seq2SeqParams<T> init_params(const ModelConfig& config, Rng& rng);

/// Same shapes, all zeros.
template <typename T>
Seq2SeqParams<T> zeros_like(const Seq2SeqParams<T>& params);

template <typename To, typename From>
Seq2SeqParams<To> cast_params(const Seq2SeqParams<From>& params);

template <typename T>
std::size_t parameter_count(const Seq2SeqParams<T>& params);

}  // namespace seqpt::model
