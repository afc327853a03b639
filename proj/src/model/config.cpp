#include "seqpt/model/config.hpp"

#include "seqpt/error.hpp"

namespace seqpt::model {

void ModelConfig::validate() const {
  if (enc_layers < 1 || dec_layers < 1 || d_model < 1 || n_heads < 1 || enc_ffn < 1 ||
      dec_ffn < 1 || vocab_size < 1 || max_positions < 1) {
    throw InvalidArgument("model dimensions must all be >= 1");
  }
  if (d_model % n_heads != 0) throw InvalidArgument("d_model must be divisible by n_heads");
  if (enc_dropout < 0 || enc_dropout >= 1 || dec_dropout < 0 || dec_dropout >= 1) {
    throw InvalidArgument("dropout rates must lie in [0, 1)");
  }
}

}  // namespace seqpt::model
