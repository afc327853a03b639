#pragma once

#include <cstdint>
#include <span>

#include "seqpt/model/batch.hpp"
#include "seqpt/model/config.hpp"
#include "seqpt/model/optimizer.hpp"
#include "seqpt/model/params.hpp"
#include "seqpt/objectives/rng.hpp"

namespace seqpt::model {

/// exp(mean token NLL) over every live label position, dropout off.
/// Throws EmptyDataset for no batches.
template <typename T>
double evaluate_perplexity(const Seq2SeqParams<T>& params, const ModelConfig& config,
                           std::span<const Batch> batches);

/// Owns parameters, Adam state and the dropout generator between steps.
template <typename T>
class Trainer {
 public:
  Trainer(const ModelConfig& config, const OptimizerConfig& optimizer, std::uint64_t seed);
  Trainer(const ModelConfig& config, Seq2SeqParams<T> params, const OptimizerConfig& optimizer,
          std::uint64_t seed);

  /// Forward, backward and one Adam update. A non-finite loss throws
  /// NonFiniteLoss before anything is modified.
  double train_step(const Batch& batch);

  double perplexity(std::span<const Batch> batches) const {
    return evaluate_perplexity(params_, config_, batches);
  }

  /// Fresh Adam moments and step counters with a new schedule (fine-tuning).
  void reset_optimizer(const OptimizerConfig& optimizer);

  const ModelConfig& config() const { return config_; }
  const Seq2SeqParams<T>& params() const { return params_; }
  Seq2SeqParams<T>& params() { return params_; }
  const OptimizerState<T>& optimizer() const { return optimizer_; }
  OptimizerState<T>& optimizer() { return optimizer_; }
  const Rng& rng() const { return rng_; }
  Rng& rng() { return rng_; }
  std::size_t steps() const { return steps_; }
  void set_steps(std::size_t steps) { steps_ = steps; }

 private:
  ModelConfig config_;
  Seq2SeqParams<T> params_;
  OptimizerState<T> optimizer_;
  Rng rng_;
  std::size_t steps_ = 0;
};

}  // namespace seqpt::model
