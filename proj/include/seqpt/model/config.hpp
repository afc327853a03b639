#pragma once

#include <cstddef>

#include "json.hpp"

namespace seqpt::model {

/// Shape of the encoder-decoder. Defaults are the desk-scale model: the
/// encoder keeps the wider feed-forward block and the decoder the heavier
/// dropout.
struct ModelConfig {
  std::size_t enc_layers = 2;
  std::size_t dec_layers = 2;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t enc_ffn = 256;
  std::size_t dec_ffn = 128;
  double enc_dropout = 0.1;
  double dec_dropout = 0.3;
  std::size_t vocab_size = 1024;
  std::size_t max_positions = 512;
  /// One token table shared by encoder input, decoder input and the output
  /// projection.
  bool tie_embeddings = true;
  double embedding_init_std = 0.02;

  std::size_t head_dim() const { return d_model / n_heads; }
  void validate() const;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ModelConfig, enc_layers, dec_layers, d_model,
                                                n_heads, enc_ffn, dec_ffn, enc_dropout,
                                                dec_dropout, vocab_size, max_positions,
                                                tie_embeddings, embedding_init_std)

}  // namespace seqpt::model
