#include "seqpt/model/trainer.hpp"

#include <cmath>

#include "seqpt/error.hpp"
#include "seqpt/model/transformer.hpp"

namespace seqpt::model {

template <typename T>
double evaluate_perplexity(const Seq2SeqParams<T>& params, const ModelConfig& config,
                           std::span<const Batch> batches) {
  if (batches.empty()) throw EmptyDataset("perplexity needs at least one batch");
  double nll = 0.0;
  std::size_t live = 0;
  for (const auto& batch : batches) {
    auto fwd = forward(params, config, batch, nullptr);
    auto l = loss(fwd.logits, batch, false);
    nll += l.total_nll;
    live += l.live;
  }
  return std::exp(nll / static_cast<double>(live));
}

template <typename T>
Trainer<T>::Trainer(const ModelConfig& config, const OptimizerConfig& optimizer,
                    std::uint64_t seed)
    : config_(config), rng_(seed) {
  Rng init(derive_seed(seed, "init"));
  params_ = init_params<T>(config_, init);
  optimizer_ = OptimizerState<T>::create(params_, optimizer);
}

template <typename T>
Trainer<T>::Trainer(const ModelConfig& config, Seq2SeqParams<T> params,
                    const OptimizerConfig& optimizer, std::uint64_t seed)
    : config_(config), params_(std::move(params)), rng_(seed) {
  config_.validate();
  optimizer_ = OptimizerState<T>::create(params_, optimizer);
}

template <typename T>
double Trainer<T>::train_step(const Batch& batch) {
  Seq2SeqParams<T> grads;
  const bool dropout = config_.enc_dropout > 0.0 || config_.dec_dropout > 0.0;
  const double value = loss_and_gradient(params_, config_, batch, grads, dropout ? &rng_ : nullptr);
  if (!std::isfinite(value)) {
    throw NonFiniteLoss("non-finite loss at step " + std::to_string(steps_ + 1));
  }
  adam_step(params_, grads, optimizer_);
  ++steps_;
  return value;
}

template <typename T>
void Trainer<T>::reset_optimizer(const OptimizerConfig& optimizer) {
  optimizer_ = OptimizerState<T>::create(params_, optimizer);
}

template class Trainer<float>;
template class Trainer<double>;
template double evaluate_perplexity(const Seq2SeqParams<float>&, const ModelConfig&,
                                    std::span<const Batch>);
template double evaluate_perplexity(const Seq2SeqParams<double>&, const ModelConfig&,
                                    std::span<const Batch>);

}  // namespace seqpt::model
