#pragma once

#include <cstddef>

#include "json.hpp"
#include "seqpt/model/params.hpp"

namespace seqpt::model {

/// Linear warmup to `peak_lr` at `step == warmup`, then inverse-square-root
/// decay: peak * min(step / warmup, sqrt(warmup / step)).
double lr_schedule(std::size_t step, double peak_lr, std::size_t warmup);

struct GroupSchedule {
  double peak_lr = 1e-4;
  std::size_t warmup = 10000;
};

struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-8;
  GroupSchedule encoder{2e-5, 10000};
  GroupSchedule decoder{1e-4, 10000};

  /// Separate encoder/decoder peaks for pre-training.
  static OptimizerConfig pretrain_defaults();
  /// Both groups at 2e-5 with 4,000 warmup steps.
  static OptimizerConfig finetune_defaults();
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GroupSchedule, peak_lr, warmup)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(OptimizerConfig, beta1, beta2, epsilon, encoder,
                                                decoder)

/// Adam state for the two parameter groups. Moments live in parameter-shaped
/// structs; each group advances its own step counter.
template <typename T>
struct OptimizerState {
  OptimizerConfig config;
  std::size_t encoder_step = 0;
  std::size_t decoder_step = 0;
  Seq2SeqParams<T> first_moment;
  Seq2SeqParams<T> second_moment;

  static OptimizerState create(const Seq2SeqParams<T>& params, const OptimizerConfig& config);
};

/// One Adam update of every tensor with its group's scheduled learning rate.
template <typename T>
void adam_step(Seq2SeqParams<T>& params, const Seq2SeqParams<T>& grads, OptimizerState<T>& state);

}  // namespace seqpt::model
