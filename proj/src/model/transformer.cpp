#include "seqpt/model/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "seqpt/error.hpp"

namespace seqpt::model {
namespace {

using Eigen::Index;

constexpr double kNormEps = 1e-5;

template <typename T>
Matrix<T> affine(const Matrix<T>& x, const Matrix<T>& w, const Matrix<T>& b) {
  Matrix<T> out = x * w;
  out.rowwise() += b.row(0);
  return out;
}

// Accumulates dW, db and returns dx.
template <typename T>
Matrix<T> affine_backward(const Matrix<T>& x, const Matrix<T>& w, const Matrix<T>& dout,
                          Matrix<T>& gw, Matrix<T>& gb) {
  gw.noalias() += x.transpose() * dout;
  gb += dout.colwise().sum();
  return dout * w.transpose();
}

template <typename T>
Matrix<T> layer_norm(const LayerNormParams<T>& p, const Matrix<T>& x, LayerNormCache<T>& c) {
  const ColVector<T> mean = x.rowwise().mean();
  const Matrix<T> centered = x.colwise() - mean;
  const ColVector<T> var = centered.array().square().rowwise().mean();
  c.inv_std = (var.array() + static_cast<T>(kNormEps)).rsqrt();
  c.normalized = centered.array().colwise() * c.inv_std.array();
  Matrix<T> y = c.normalized.array().rowwise() * p.gain.row(0).array();
  y.rowwise() += p.bias.row(0);
  return y;
}

template <typename T>
Matrix<T> layer_norm_backward(const LayerNormParams<T>& p, const LayerNormCache<T>& c,
                              const Matrix<T>& dy, LayerNormParams<T>& g) {
  g.gain += (dy.array() * c.normalized.array()).colwise().sum().matrix();
  g.bias += dy.colwise().sum();
  const Matrix<T> dn = dy.array().rowwise() * p.gain.row(0).array();
  const ColVector<T> mean_dn = dn.rowwise().mean();
  const ColVector<T> mean_dn_n = (dn.array() * c.normalized.array()).rowwise().mean();
  Matrix<T> dx = (dn.colwise() - mean_dn).array() -
                 c.normalized.array().colwise() * mean_dn_n.array();
  dx.array().colwise() *= c.inv_std.array();
  return dx;
}

template <typename T>
void softmax_rows(Matrix<T>& s, bool causal) {
  for (Index i = 0; i < s.rows(); ++i) {
    const Index live = causal ? std::min(i + 1, s.cols()) : s.cols();
    auto row = s.row(i);
    const T max = row.head(live).maxCoeff();
    T sum = 0;
    for (Index j = 0; j < live; ++j) {
      row(j) = std::exp(row(j) - max);
      sum += row(j);
    }
    row.head(live) /= sum;
    for (Index j = live; j < s.cols(); ++j) row(j) = 0;
  }
}

template <typename T>
Matrix<T> attention(const AttentionParams<T>& p, const Matrix<T>& query_in,
                    const Matrix<T>& memory_in, std::size_t heads, bool causal,
                    AttentionCache<T>& c) {
  c.query_in = query_in;
  c.memory_in = memory_in;
  c.q = affine(query_in, p.wq, p.bq);
  c.k = affine(memory_in, p.wk, p.bk);
  c.v = affine(memory_in, p.wv, p.bv);
  const Index d = c.q.cols();
  const Index dh = d / static_cast<Index>(heads);
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  c.context.resize(c.q.rows(), d);
  c.probs.resize(heads);
  for (Index h = 0; h < static_cast<Index>(heads); ++h) {
    Matrix<T> s = (c.q.middleCols(h * dh, dh) * c.k.middleCols(h * dh, dh).transpose()) * scale;
    softmax_rows(s, causal);
    c.context.middleCols(h * dh, dh).noalias() = s * c.v.middleCols(h * dh, dh);
    c.probs[h] = std::move(s);
  }
  return affine(c.context, p.wo, p.bo);
}

template <typename T>
void attention_backward(const AttentionParams<T>& p, const AttentionCache<T>& c,
                        std::size_t heads, const Matrix<T>& dout, AttentionParams<T>& g,
                        Matrix<T>& d_query_in, Matrix<T>& d_memory_in) {
  const Matrix<T> dcontext = affine_backward(c.context, p.wo, dout, g.wo, g.bo);
  const Index d = c.q.cols();
  const Index dh = d / static_cast<Index>(heads);
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  Matrix<T> dq(c.q.rows(), d), dk(c.k.rows(), d), dv(c.v.rows(), d);
  for (Index h = 0; h < static_cast<Index>(heads); ++h) {
    const auto& probs = c.probs[h];
    const Matrix<T> dctx = dcontext.middleCols(h * dh, dh);
    dv.middleCols(h * dh, dh).noalias() = probs.transpose() * dctx;
    const Matrix<T> dprobs = dctx * c.v.middleCols(h * dh, dh).transpose();
    const ColVector<T> row_dot = (dprobs.array() * probs.array()).rowwise().sum();
    const Matrix<T> dscores =
        (probs.array() * (dprobs.colwise() - row_dot).array()).matrix() * scale;
    dq.middleCols(h * dh, dh).noalias() = dscores * c.k.middleCols(h * dh, dh);
    dk.middleCols(h * dh, dh).noalias() = dscores.transpose() * c.q.middleCols(h * dh, dh);
  }
  d_query_in = affine_backward(c.query_in, p.wq, dq, g.wq, g.bq);
  d_memory_in = affine_backward(c.memory_in, p.wk, dk, g.wk, g.bk);
  d_memory_in += affine_backward(c.memory_in, p.wv, dv, g.wv, g.bv);
}

// tanh approximation of GELU
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

template <typename T>
Matrix<T> feed_forward(const FeedForwardParams<T>& p, const Matrix<T>& x, FeedForwardCache<T>& c) {
  c.input = x;
  c.pre_activation = affine(x, p.w1, p.b1);
  c.activation = c.pre_activation.unaryExpr([](T u) {
    const double v = static_cast<double>(u);
    return static_cast<T>(0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v))));
  });
  return affine(c.activation, p.w2, p.b2);
}

template <typename T>
Matrix<T> feed_forward_backward(const FeedForwardParams<T>& p, const FeedForwardCache<T>& c,
                                const Matrix<T>& dout, FeedForwardParams<T>& g) {
  Matrix<T> dact = affine_backward(c.activation, p.w2, dout, g.w2, g.b2);
  const Matrix<T> slope = c.pre_activation.unaryExpr([](T u) {
    const double v = static_cast<double>(u);
    const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
    return static_cast<T>(0.5 * (1.0 + t) +
                          0.5 * v * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v));
  });
  dact.array() *= slope.array();
  return affine_backward(c.input, p.w1, dact, g.w1, g.b1);
}

template <typename T>
Matrix<T> dropout_mask(Index rows, Index cols, double rate, Rng* rng) {
  if (rng == nullptr || rate <= 0.0) return {};
  Matrix<T> mask(rows, cols);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng->uniform() < rate ? T(0) : keep_scale;
  return mask;
}

template <typename T>
void apply_mask(Matrix<T>& x, const Matrix<T>& mask) {
  if (mask.size() != 0) x.array() *= mask.array();
}

template <typename T>
void encoder_layer(const EncoderLayerParams<T>& p, const ModelConfig& cfg, Matrix<T>& x,
                   EncoderLayerCache<T>& c, Rng* rng) {
  const Matrix<T> a = layer_norm(p.norm_attn, x, c.norm_attn);
  Matrix<T> h = attention(p.self_attn, a, a, cfg.n_heads, false, c.self_attn);
  c.drop_attn = dropout_mask<T>(h.rows(), h.cols(), cfg.enc_dropout, rng);
  apply_mask(h, c.drop_attn);
  x += h;
  const Matrix<T> b = layer_norm(p.norm_ffn, x, c.norm_ffn);
  Matrix<T> f = feed_forward(p.ffn, b, c.ffn);
  c.drop_ffn = dropout_mask<T>(f.rows(), f.cols(), cfg.enc_dropout, rng);
  apply_mask(f, c.drop_ffn);
  x += f;
}

// dx holds the gradient w.r.t. the layer output on entry, the input on exit.
template <typename T>
void encoder_layer_backward(const EncoderLayerParams<T>& p, const ModelConfig& cfg,
                            const EncoderLayerCache<T>& c, Matrix<T>& dx,
                            EncoderLayerParams<T>& g) {
  Matrix<T> df = dx;
  apply_mask(df, c.drop_ffn);
  dx += layer_norm_backward(p.norm_ffn, c.norm_ffn, feed_forward_backward(p.ffn, c.ffn, df, g.ffn),
                            g.norm_ffn);
  Matrix<T> dh = dx;
  apply_mask(dh, c.drop_attn);
  Matrix<T> dq, dm;
  attention_backward(p.self_attn, c.self_attn, cfg.n_heads, dh, g.self_attn, dq, dm);
  dq += dm;
  dx += layer_norm_backward(p.norm_attn, c.norm_attn, dq, g.norm_attn);
}

template <typename T>
void decoder_layer(const DecoderLayerParams<T>& p, const ModelConfig& cfg, Matrix<T>& y,
                   const Matrix<T>& memory, DecoderLayerCache<T>& c, Rng* rng) {
  const Matrix<T> a = layer_norm(p.norm_self, y, c.norm_self);
  Matrix<T> h = attention(p.self_attn, a, a, cfg.n_heads, true, c.self_attn);
  c.drop_self = dropout_mask<T>(h.rows(), h.cols(), cfg.dec_dropout, rng);
  apply_mask(h, c.drop_self);
  y += h;
  const Matrix<T> b = layer_norm(p.norm_cross, y, c.norm_cross);
  Matrix<T> k = attention(p.cross_attn, b, memory, cfg.n_heads, false, c.cross_attn);
  c.drop_cross = dropout_mask<T>(k.rows(), k.cols(), cfg.dec_dropout, rng);
  apply_mask(k, c.drop_cross);
  y += k;
  const Matrix<T> e = layer_norm(p.norm_ffn, y, c.norm_ffn);
  Matrix<T> f = feed_forward(p.ffn, e, c.ffn);
  c.drop_ffn = dropout_mask<T>(f.rows(), f.cols(), cfg.dec_dropout, rng);
  apply_mask(f, c.drop_ffn);
  y += f;
}

template <typename T>
void decoder_layer_backward(const DecoderLayerParams<T>& p, const ModelConfig& cfg,
                            const DecoderLayerCache<T>& c, Matrix<T>& dy, Matrix<T>& dmemory,
                            DecoderLayerParams<T>& g) {
  Matrix<T> df = dy;
  apply_mask(df, c.drop_ffn);
  dy += layer_norm_backward(p.norm_ffn, c.norm_ffn, feed_forward_backward(p.ffn, c.ffn, df, g.ffn),
                            g.norm_ffn);

  Matrix<T> dk = dy;
  apply_mask(dk, c.drop_cross);
  Matrix<T> dq, dm;
  attention_backward(p.cross_attn, c.cross_attn, cfg.n_heads, dk, g.cross_attn, dq, dm);
  dmemory += dm;
  dy += layer_norm_backward(p.norm_cross, c.norm_cross, dq, g.norm_cross);

  Matrix<T> dh = dy;
  apply_mask(dh, c.drop_self);
  attention_backward(p.self_attn, c.self_attn, cfg.n_heads, dh, g.self_attn, dq, dm);
  dq += dm;
  dy += layer_norm_backward(p.norm_self, c.norm_self, dq, g.norm_self);
}

template <typename T>
Matrix<T> embed(const Matrix<T>& table, const Matrix<T>& positions,
                std::span<const TokenId> tokens) {
  Matrix<T> x(static_cast<Index>(tokens.size()), table.cols());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    x.row(static_cast<Index>(t)) = table.row(tokens[t]) + positions.row(static_cast<Index>(t));
  }
  return x;
}

template <typename T>
void embed_backward(const Matrix<T>& dx, std::span<const TokenId> tokens, Matrix<T>& g_table,
                    Matrix<T>& g_positions) {
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    g_table.row(tokens[t]) += dx.row(static_cast<Index>(t));
    g_positions.row(static_cast<Index>(t)) += dx.row(static_cast<Index>(t));
  }
}

template <typename T>
void run_encoder(const Seq2SeqParams<T>& params, const ModelConfig& cfg, ExampleCache<T>& c,
                 Rng* rng) {
  if (c.source.size() > cfg.max_positions) throw ShapeMismatch("source longer than max_positions");
  Matrix<T> x = embed(params.token_embedding, params.encoder_positions, std::span(c.source));
  c.drop_source_embedding = dropout_mask<T>(x.rows(), x.cols(), cfg.enc_dropout, rng);
  apply_mask(x, c.drop_source_embedding);
  c.encoder.resize(params.encoder.size());
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    encoder_layer(params.encoder[l], cfg, x, c.encoder[l], rng);
  }
  c.memory = layer_norm(params.encoder_norm, x, c.encoder_norm);
}

template <typename T>
void run_decoder(const Seq2SeqParams<T>& params, const ModelConfig& cfg, ExampleCache<T>& c,
                 Rng* rng) {
  if (c.decoder_input.size() > cfg.max_positions) {
    throw ShapeMismatch("target longer than max_positions");
  }
  Matrix<T> y = embed(params.decoder_table(), params.decoder_positions, std::span(c.decoder_input));
  c.drop_target_embedding = dropout_mask<T>(y.rows(), y.cols(), cfg.dec_dropout, rng);
  apply_mask(y, c.drop_target_embedding);
  c.decoder.resize(params.decoder.size());
  for (std::size_t l = 0; l < params.decoder.size(); ++l) {
    decoder_layer(params.decoder[l], cfg, y, c.memory, c.decoder[l], rng);
  }
  c.hidden = layer_norm(params.decoder_norm, y, c.decoder_norm);
}

template <typename T>
Matrix<T>& decoder_table_grad(Seq2SeqParams<T>& g) {
  return g.decoder_embedding.size() ? g.decoder_embedding : g.token_embedding;
}

template <typename T>
Matrix<T>& output_table_grad(Seq2SeqParams<T>& g) {
  return g.output_projection.size() ? g.output_projection : g.token_embedding;
}

void check_params_match(const ModelConfig& cfg, std::size_t vocab_rows, std::size_t enc,
                        std::size_t dec) {
  if (vocab_rows != cfg.vocab_size || enc != cfg.enc_layers || dec != cfg.dec_layers) {
    throw ShapeMismatch("parameters do not match the model configuration");
  }
}

}  // namespace

template <typename T>
ForwardResult<T> forward(const Seq2SeqParams<T>& params, const ModelConfig& config,
                         const Batch& batch, Rng* dropout_rng) {
  config.validate();
  check_params_match(config, static_cast<std::size_t>(params.token_embedding.rows()),
                     params.encoder.size(), params.decoder.size());
  validate_batch(batch, config.vocab_size, config.max_positions);
  ForwardResult<T> result;
  result.logits.resize(batch.size);
  result.cache.resize(batch.size);
  const auto vocab = static_cast<Index>(config.vocab_size);
  for (std::size_t b = 0; b < batch.size; ++b) {
    auto& c = result.cache[b];
    const auto src = batch.source_row(b).first(batch.live_source(b));
    c.source.assign(src.begin(), src.end());
    const auto dec = batch.decoder_row(b).first(std::max<std::size_t>(batch.live_target(b), 1));
    c.decoder_input.assign(dec.begin(), dec.end());
    run_encoder(params, config, c, dropout_rng);
    run_decoder(params, config, c, dropout_rng);
    auto& logits = result.logits[b];
    logits = Matrix<T>::Zero(static_cast<Index>(batch.target_len), vocab);
    logits.topRows(c.hidden.rows()).noalias() = c.hidden * params.output_table().transpose();
  }
  return result;
}

template <typename T>
LossResult<T> loss(const std::vector<Matrix<T>>& logits, const Batch& batch, bool with_gradient) {
  if (logits.size() != batch.size) throw ShapeMismatch("logits and batch disagree on batch size");
  LossResult<T> out;
  out.live = batch.live_labels();
  if (out.live == 0) throw AllPadded("no live label position in batch");
  const double inv_live = 1.0 / static_cast<double>(out.live);
  if (with_gradient) out.dlogits.resize(batch.size);
  for (std::size_t b = 0; b < batch.size; ++b) {
    const auto& z = logits[b];
    if (static_cast<std::size_t>(z.rows()) != batch.target_len) {
      throw ShapeMismatch("logits rows disagree with target length");
    }
    if (with_gradient) out.dlogits[b] = Matrix<T>::Zero(z.rows(), z.cols());
    const auto labels = batch.label_row(b);
    for (std::size_t t = 0; t < batch.target_len; ++t) {
      if (!batch.label_mask[b * batch.target_len + t]) continue;
      const auto row = z.row(static_cast<Index>(t));
      const double max = static_cast<double>(row.maxCoeff());
      double sum = 0.0;
      for (Index v = 0; v < row.size(); ++v) sum += std::exp(static_cast<double>(row(v)) - max);
      const double lse = max + std::log(sum);
      out.total_nll += lse - static_cast<double>(row(labels[t]));
      if (with_gradient) {
        auto drow = out.dlogits[b].row(static_cast<Index>(t));
        for (Index v = 0; v < row.size(); ++v) {
          drow(v) = static_cast<T>(std::exp(static_cast<double>(row(v)) - lse) * inv_live);
        }
        drow(labels[t]) -= static_cast<T>(inv_live);
      }
    }
  }
  out.value = out.total_nll * inv_live;
  return out;
}

template <typename T>
Seq2SeqParams<T> backward(const Seq2SeqParams<T>& params, const ModelConfig& config,
                          const Batch& batch, const std::vector<ExampleCache<T>>& cache,
                          const std::vector<Matrix<T>>& dlogits) {
  if (cache.size() != batch.size || dlogits.size() != batch.size) {
    throw ShapeMismatch("cache or gradient does not match the batch");
  }
  Seq2SeqParams<T> g = zeros_like(params);
  for (std::size_t b = 0; b < batch.size; ++b) {
    const auto& c = cache[b];
    const Matrix<T> dz = dlogits[b].topRows(c.hidden.rows());
    output_table_grad(g).noalias() += dz.transpose() * c.hidden;
    Matrix<T> dy = dz * params.output_table();
    dy = layer_norm_backward(params.decoder_norm, c.decoder_norm, dy, g.decoder_norm);
    Matrix<T> dmemory = Matrix<T>::Zero(c.memory.rows(), c.memory.cols());
    for (std::size_t l = params.decoder.size(); l-- > 0;) {
      decoder_layer_backward(params.decoder[l], config, c.decoder[l], dy, dmemory, g.decoder[l]);
    }
    apply_mask(dy, c.drop_target_embedding);
    embed_backward(dy, std::span(c.decoder_input), decoder_table_grad(g), g.decoder_positions);

    Matrix<T> dx = layer_norm_backward(params.encoder_norm, c.encoder_norm, dmemory, g.encoder_norm);
    for (std::size_t l = params.encoder.size(); l-- > 0;) {
      encoder_layer_backward(params.encoder[l], config, c.encoder[l], dx, g.encoder[l]);
    }
    apply_mask(dx, c.drop_source_embedding);
    embed_backward(dx, std::span(c.source), g.token_embedding, g.encoder_positions);
  }
  return g;
}

template <typename T>
double loss_and_gradient(const Seq2SeqParams<T>& params, const ModelConfig& config,
                         const Batch& batch, Seq2SeqParams<T>& grads, Rng* dropout_rng) {
  auto fwd = forward(params, config, batch, dropout_rng);
  auto l = loss(fwd.logits, batch, true);
  grads = backward(params, config, batch, fwd.cache, l.dlogits);
  return l.value;
}

template <typename T>
double loss_only(const Seq2SeqParams<T>& params, const ModelConfig& config, const Batch& batch) {
  auto fwd = forward(params, config, batch, nullptr);
  return loss(fwd.logits, batch, false).value;
}

template <typename T>
Matrix<T> encode_source(const Seq2SeqParams<T>& params, const ModelConfig& config,
                        std::span<const TokenId> source) {
  if (source.empty()) throw ShapeMismatch("empty source");
  ExampleCache<T> c;
  c.source.assign(source.begin(), source.end());
  for (TokenId id : c.source) {
    if (id < 0 || static_cast<std::size_t>(id) >= config.vocab_size) {
      throw ShapeMismatch("source token outside the model vocabulary");
    }
  }
  run_encoder(params, config, c, nullptr);
  return std::move(c.memory);
}

template <typename T>
Matrix<T> next_token_log_probs(const Seq2SeqParams<T>& params, const ModelConfig& config,
                               const Matrix<T>& memory, std::span<const TokenId> prefix) {
  if (prefix.empty()) throw ShapeMismatch("decoder prefix must contain BOS");
  ExampleCache<T> c;
  c.memory = memory;
  c.decoder_input.assign(prefix.begin(), prefix.end());
  run_decoder(params, config, c, nullptr);
  Matrix<T> logits = c.hidden.bottomRows(1) * params.output_table().transpose();
  const T max = logits.maxCoeff();
  const T lse = max + std::log((logits.array() - max).exp().sum());
  logits.array() -= lse;
  return logits;
}

#define SEQPT_INSTANTIATE(T)                                                                    \
  template ForwardResult<T> forward(const Seq2SeqParams<T>&, const ModelConfig&, const Batch&, \
                                    Rng*);                                                     \
  template LossResult<T> loss(const std::vector<Matrix<T>>&, const Batch&, bool);             \
  template Seq2SeqParams<T> backward(const Seq2SeqParams<T>&, const ModelConfig&,             \
                                     const Batch&, const std::vector<ExampleCache<T>>&,       \
                                     const std::vector<Matrix<T>>&);                          \
  template double loss_and_gradient(const Seq2SeqParams<T>&, const ModelConfig&,              \
                                    const Batch&, Seq2SeqParams<T>&, Rng*);                   \
  template double loss_only(const Seq2SeqParams<T>&, const ModelConfig&, const Batch&);       \
  template Matrix<T> encode_source(const Seq2SeqParams<T>&, const ModelConfig&,               \
                                   std::span<const TokenId>);                                 \
  template Matrix<T> next_token_log_probs(const Seq2SeqParams<T>&, const ModelConfig&,        \
                                          const Matrix<T>&, std::span<const TokenId>);

SEQPT_INSTANTIATE(float)
SEQPT_INSTANTIATE(double)

#undef SEQPT_INSTANTIATE

}  // namespace seqpt::model
