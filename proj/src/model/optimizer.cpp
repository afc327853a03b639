#include "seqpt/model/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "seqpt/error.hpp"

namespace seqpt::model {

double lr_schedule(std::size_t step, double peak_lr, std::size_t warmup) {
  if (step < 1 || warmup < 1) throw InvalidArgument("lr_schedule needs step >= 1 and warmup >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup);
  return peak_lr * std::min(s / w, std::sqrt(w / s));
}

OptimizerConfig OptimizerConfig::pretrain_defaults() { return OptimizerConfig{}; }

OptimizerConfig OptimizerConfig::finetune_defaults() {
  OptimizerConfig cfg;
  cfg.encoder = {2e-5, 4000};
  cfg.decoder = {2e-5, 4000};
  return cfg;
}

template <typename T>
OptimizerState<T> OptimizerState<T>::create(const Seq2SeqParams<T>& params,
                                            const OptimizerConfig& config) {
  OptimizerState<T> state;
  state.config = config;
  state.first_moment = zeros_like(params);
  state.second_moment = zeros_like(params);
  return state;
}

template <typename T>
void adam_step(Seq2SeqParams<T>& params, const Seq2SeqParams<T>& grads, OptimizerState<T>& state) {
  auto grads_copy = grads;
  auto p = tensors(params);
  auto g = tensors(grads_copy);
  auto m = tensors(state.first_moment);
  auto v = tensors(state.second_moment);
  if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size()) {
    throw ShapeMismatch("optimizer state does not match parameters");
  }
  const auto& cfg = state.config;
  ++state.encoder_step;
  ++state.decoder_step;
  struct GroupRate {
    double lr, bias1, bias2;
  };
  auto rate = [&](const GroupSchedule& s, std::size_t step) {
    const double n = static_cast<double>(step);
    return GroupRate{lr_schedule(step, s.peak_lr, s.warmup), 1.0 - std::pow(cfg.beta1, n),
                     1.0 - std::pow(cfg.beta2, n)};
  };
  const GroupRate enc = rate(cfg.encoder, state.encoder_step);
  const GroupRate dec = rate(cfg.decoder, state.decoder_step);
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);

  for (std::size_t i = 0; i < p.size(); ++i) {
    const GroupRate& r = p[i].group == ParamGroup::kEncoder ? enc : dec;
    auto& param = *p[i].value;
    const auto& grad = *g[i].value;
    auto& m1 = *m[i].value;
    auto& m2 = *v[i].value;
    if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
      throw ShapeMismatch("gradient shape mismatch for " + p[i].name);
    }
    m1 = b1 * m1 + (T(1) - b1) * grad;
    m2.array() = b2 * m2.array() + (T(1) - b2) * grad.array().square();
    if (r.lr == 0.0) continue;
    const T step = static_cast<T>(r.lr / r.bias1);
    const T inv_bias2 = static_cast<T>(1.0 / r.bias2);
    param.array() -=
        step * m1.array() / ((m2.array() * inv_bias2).sqrt() + static_cast<T>(cfg.epsilon));
  }
}

template struct OptimizerState<float>;
template struct OptimizerState<double>;
template void adam_step(Seq2SeqParams<float>&, const Seq2SeqParams<float>&,
                        OptimizerState<float>&);
template void adam_step(Seq2SeqParams<double>&, const Seq2SeqParams<double>&,
                        OptimizerState<double>&);

}  // namespace seqpt::model
