#include "seqpt/model/params.hpp"

#include <cmath>

namespace seqpt::model {
namespace {

template <typename T>
Matrix<T> normal(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  Matrix<T> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.normal(0.0, stddev));
  return m;
}

template <typename T>
Matrix<T> xavier(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  return normal<T>(fan_in, fan_out, std::sqrt(2.0 / static_cast<double>(fan_in + fan_out)), rng);
}

template <typename T>
LayerNormParams<T> init_norm(Eigen::Index d) {
  return {Matrix<T>::Ones(1, d), Matrix<T>::Zero(1, d)};
}

template <typename T>
AttentionParams<T> init_attention(Eigen::Index d, Rng& rng) {
  AttentionParams<T> p;
  p.wq = xavier<T>(d, d, rng);
  p.wk = xavier<T>(d, d, rng);
  p.wv = xavier<T>(d, d, rng);
  p.wo = xavier<T>(d, d, rng);
  p.bq = p.bk = p.bv = p.bo = Matrix<T>::Zero(1, d);
  return p;
}

template <typename T>
FeedForwardParams<T> init_ffn(Eigen::Index d, Eigen::Index hidden, Rng& rng) {
  return {xavier<T>(d, hidden, rng), Matrix<T>::Zero(1, hidden), xavier<T>(hidden, d, rng),
          Matrix<T>::Zero(1, d)};
}

template <typename T, typename F>
void visit_norm(LayerNormParams<T>& p, const std::string& prefix, F&& f) {
  f(prefix + ".gain", p.gain);
  f(prefix + ".bias", p.bias);
}

template <typename T, typename F>
void visit_attention(AttentionParams<T>& p, const std::string& prefix, F&& f) {
  f(prefix + ".wq", p.wq);
  f(prefix + ".bq", p.bq);
  f(prefix + ".wk", p.wk);
  f(prefix + ".bk", p.bk);
  f(prefix + ".wv", p.wv);
  f(prefix + ".bv", p.bv);
  f(prefix + ".wo", p.wo);
  f(prefix + ".bo", p.bo);
}

template <typename T, typename F>
void visit_ffn(FeedForwardParams<T>& p, const std::string& prefix, F&& f) {
  f(prefix + ".w1", p.w1);
  f(prefix + ".b1", p.b1);
  f(prefix + ".w2", p.w2);
  f(prefix + ".b2", p.b2);
}

// Calls f(name, group, matrix) for every tensor, empty ones included.
template <typename T, typename F>
void visit(Seq2SeqParams<T>& p, F&& f) {
  auto enc = [&](const std::string& name, Matrix<T>& m) { f(name, ParamGroup::kEncoder, m); };
  auto dec = [&](const std::string& name, Matrix<T>& m) { f(name, ParamGroup::kDecoder, m); };
  enc("token_embedding", p.token_embedding);
  enc("encoder_positions", p.encoder_positions);
  for (std::size_t i = 0; i < p.encoder.size(); ++i) {
    const std::string prefix = "encoder." + std::to_string(i);
    auto& layer = p.encoder[i];
    visit_norm(layer.norm_attn, prefix + ".norm_attn", enc);
    visit_attention(layer.self_attn, prefix + ".self_attn", enc);
    visit_norm(layer.norm_ffn, prefix + ".norm_ffn", enc);
    visit_ffn(layer.ffn, prefix + ".ffn", enc);
  }
  visit_norm(p.encoder_norm, "encoder_norm", enc);
  dec("decoder_embedding", p.decoder_embedding);
  dec("decoder_positions", p.decoder_positions);
  for (std::size_t i = 0; i < p.decoder.size(); ++i) {
    const std::string prefix = "decoder." + std::to_string(i);
    auto& layer = p.decoder[i];
    visit_norm(layer.norm_self, prefix + ".norm_self", dec);
    visit_attention(layer.self_attn, prefix + ".self_attn", dec);
    visit_norm(layer.norm_cross, prefix + ".norm_cross", dec);
    visit_attention(layer.cross_attn, prefix + ".cross_attn", dec);
    visit_norm(layer.norm_ffn, prefix + ".norm_ffn", dec);
    visit_ffn(layer.ffn, prefix + ".ffn", dec);
  }
  visit_norm(p.decoder_norm, "decoder_norm", dec);
  dec("output_projection", p.output_projection);
}

}  // namespace

template <typename T>
std::vector<TensorRef<T>> tensors(Seq2SeqParams<T>& params) {
  std::vector<TensorRef<T>> out;
  visit(params, [&](const std::string& name, ParamGroup group, Matrix<T>& m) {
    if (m.size() > 0) out.push_back({name, group, &m});
  });
  return out;
}

template <typename T>
Seq2SeqParams<T> init_params(const ModelConfig& config, Rng& rng) {
  config.validate();
  const auto d = static_cast<Eigen::Index>(config.d_model);
  const auto vocab = static_cast<Eigen::Index>(config.vocab_size);
  const auto positions = static_cast<Eigen::Index>(config.max_positions);
  const double emb_std = config.embedding_init_std;

  Seq2SeqParams<T> p;
  p.token_embedding = normal<T>(vocab, d, emb_std, rng);
  p.encoder_positions = normal<T>(positions, d, emb_std, rng);
  for (std::size_t i = 0; i < config.enc_layers; ++i) {
    EncoderLayerParams<T> layer;
    layer.norm_attn = init_norm<T>(d);
    layer.self_attn = init_attention<T>(d, rng);
    layer.norm_ffn = init_norm<T>(d);
    layer.ffn = init_ffn<T>(d, static_cast<Eigen::Index>(config.enc_ffn), rng);
    p.encoder.push_back(std::move(layer));
  }
  p.encoder_norm = init_norm<T>(d);
  if (!config.tie_embeddings) p.decoder_embedding = normal<T>(vocab, d, emb_std, rng);
  p.decoder_positions = normal<T>(positions, d, emb_std, rng);
  for (std::size_t i = 0; i < config.dec_layers; ++i) {
    DecoderLayerParams<T> layer;
    layer.norm_self = init_norm<T>(d);
    layer.self_attn = init_attention<T>(d, rng);
    layer.norm_cross = init_norm<T>(d);
    layer.cross_attn = init_attention<T>(d, rng);
    layer.norm_ffn = init_norm<T>(d);
    layer.ffn = init_ffn<T>(d, static_cast<Eigen::Index>(config.dec_ffn), rng);
    p.decoder.push_back(std::move(layer));
  }
  p.decoder_norm = init_norm<T>(d);
  if (!config.tie_embeddings) p.output_projection = normal<T>(vocab, d, emb_std, rng);
  return p;
}

template <typename T>
Seq2SeqParams<T> zeros_like(const Seq2SeqParams<T>& params) {
  Seq2SeqParams<T> out = params;
  visit(out, [](const std::string&, ParamGroup, Matrix<T>& m) { m.setZero(); });
  return out;
}

template <typename To, typename From>
Seq2SeqParams<To> cast_params(const Seq2SeqParams<From>& params) {
  auto src = params;
  Seq2SeqParams<To> out;
  out.encoder.resize(src.encoder.size());
  out.decoder.resize(src.decoder.size());
  std::vector<Matrix<From>*> from;
  visit(src, [&](const std::string&, ParamGroup, Matrix<From>& m) { from.push_back(&m); });
  std::size_t i = 0;
  visit(out, [&](const std::string&, ParamGroup, Matrix<To>& m) { m = from[i++]->template cast<To>(); });
  return out;
}

template <typename T>
std::size_t parameter_count(const Seq2SeqParams<T>& params) {
  auto copy = params;
  std::size_t n = 0;
  for (const auto& t : tensors(copy)) n += static_cast<std::size_t>(t.value->size());
  return n;
}

template std::vector<TensorRef<float>> tensors(Seq2SeqParams<float>&);
template std::vector<TensorRef<double>> tensors(Seq2SeqParams<double>&);
template Seq2SeqParams<float> init_params(const ModelConfig&, Rng&);
template Seq2SeqParams<double> init_params(const ModelConfig&, Rng&);
template Seq2SeqParams<float> zeros_like(const Seq2SeqParams<float>&);
template Seq2SeqParams<double> zeros_like(const Seq2SeqParams<double>&);
template Seq2SeqParams<float> cast_params(const Seq2SeqParams<double>&);
template Seq2SeqParams<double> cast_params(const Seq2SeqParams<float>&);
template Seq2SeqParams<float> cast_params(const Seq2SeqParams<float>&);
template Seq2SeqParams<double> cast_params(const Seq2SeqParams<double>&);
template std::size_t parameter_count(const Seq2SeqParams<float>&);
template std::size_t parameter_count(const Seq2SeqParams<double>&);

}  // namespace seqpt::model
