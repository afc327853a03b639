// Central-difference gradient check shared by the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "seqpt/model/transformer.hpp"
#include "seqpt/objectives/rng.hpp"

namespace oracle {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords = 0;
  std::size_t above_floor = 0;  // coordinates compared in purely relative terms
  std::string worst;
};

/// Samples `n` coordinates uniformly over all parameters and compares the
/// analytic gradient against (L(θ+h) - L(θ-h)) / 2h with
/// h = 1e-3 * max(|θ|, 1e-2). Relative error is |a - n| / max(|a|, |n|, floor);
/// the floor keeps exactly-zero gradients (e.g. attention key biases) from
/// turning central-difference roundoff, about 1e-10 here, into a large ratio.
inline GradCheckResult gradient_check(const seqpt::model::Seq2SeqParams<double>& params,
                                      const seqpt::model::ModelConfig& config,
                                      const seqpt::model::Batch& batch, std::size_t n,
                                      std::uint64_t seed, double floor = 1e-4) {
  using namespace seqpt::model;
  Seq2SeqParams<double> grads;
  loss_and_gradient(params, config, batch, grads);
  Seq2SeqParams<double> probe = params;
  auto values = tensors(probe);
  auto analytic = tensors(grads);
  std::int64_t total = 0;
  for (const auto& t : values) total += t.value->size();

  seqpt::Rng rng(seed);
  GradCheckResult result;
  for (std::size_t k = 0; k < n; ++k) {
    std::int64_t idx = rng.uniform_int(0, total - 1);
    std::size_t t = 0;
    while (idx >= values[t].value->size()) idx -= values[t++].value->size();
    double& theta = values[t].value->data()[idx];
    const double saved = theta;
    const double h = 1e-3 * std::max(std::abs(saved), 1e-2);
    theta = saved + h;
    const double up = loss_only(probe, config, batch);
    theta = saved - h;
    const double down = loss_only(probe, config, batch);
    theta = saved;
    const double num = (up - down) / (2.0 * h);
    const double ana = analytic[t].value->data()[idx];
    const double rel = std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), floor});
    result.above_floor += std::max(std::abs(ana), std::abs(num)) >= floor;
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      std::ostringstream w;
      w << values[t].name << "[" << idx << "] analytic=" << ana << " numeric=" << num;
      result.worst = w.str();
    }
    ++result.coords;
  }
  return result;
}

}  // namespace oracle
