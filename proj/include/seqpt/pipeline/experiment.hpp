#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "seqpt/decoding/beam.hpp"
#include "seqpt/error.hpp"
#include "seqpt/model/batch.hpp"
#include "seqpt/model/config.hpp"
#include "seqpt/model/optimizer.hpp"
#include "seqpt/model/trainer.hpp"
#include "seqpt/objectives/objectives.hpp"

namespace seqpt::pipeline {

/// An error raised inside one stage of an experiment, tagged with the stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct RunPaths {
  std::string corpus;       // pre-training documents; may be empty with objective "none"
  std::string train_pairs;
  std::string valid_pairs;  // optional; needed for min-length tuning and the beam sweep
  std::string test_pairs;
  std::string vocab;        // loaded when present, otherwise trained and written here
  std::string output_dir;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunPaths, corpus, train_pairs, valid_pairs,
                                                test_pairs, vocab, output_dir)

struct RunConfig {
  std::uint64_t seed = 0;
  RunPaths paths;
  std::string objective = "sr";  // sr, nsg, mdg, all or none
  std::size_t vocab_size = 1024;
  std::size_t piece_len = 512;
  std::size_t span_min = 100;
  std::size_t span_max = 256;
  std::size_t target_len = 256;
  std::string nsg_split = "random";  // or "piece-boundary"
  double valid_fraction = 0.1;       // corpus share held out for perplexity
  model::ModelConfig model;
  model::OptimizerConfig pretrain_optimizer = model::OptimizerConfig::pretrain_defaults();
  model::OptimizerConfig finetune_optimizer = model::OptimizerConfig::finetune_defaults();
  std::size_t pretrain_steps = 1000;
  std::size_t finetune_steps = 1000;
  std::size_t batch_size = 16;
  std::size_t eval_every = 100;
  std::size_t max_source_len = 512;
  std::size_t max_target_len = 256;
  decoding::DecodeConfig decode;
  std::string protocol = "f1";  // or "limited-recall"
  bool tune_min_len = false;
  std::size_t min_len_lo = 30;
  std::size_t min_len_hi = 80;
  std::size_t min_len_step = 5;
  bool beam_sweep = false;
  std::vector<std::size_t> sweep_beams = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::size_t max_eval_pairs = 0;  // 0 = all
  std::size_t workers = 1;

  /// Checks value ranges and that every input path exists.
  void validate() const;
  objectives::ObjectiveConfig objective_config() const;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    RunConfig, seed, paths, objective, vocab_size, piece_len, span_min, span_max, target_len,
    nsg_split, valid_fraction, model, pretrain_optimizer, finetune_optimizer, pretrain_steps,
    finetune_steps, batch_size, eval_every, max_source_len, max_target_len, decode, protocol,
    tune_min_len, min_len_lo, min_len_hi, min_len_step, beam_sweep, sweep_beams, max_eval_pairs,
    workers)

/// Objective counts in {SR, NSG, MDG} order.
using DrawCounts = std::array<std::size_t, 3>;

struct CurvePoint {
  std::size_t step = 0;
  double value = 0.0;
};

struct PretrainReport {
  std::vector<CurvePoint> valid_perplexity;  // includes step 0
  std::vector<CurvePoint> train_loss;        // mean over each eval window
  DrawCounts draws{};
  std::vector<DrawCounts> per_batch_draws;
};

/// Epoch-shuffled minibatches; the order comes from `seed` alone.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed);
  std::vector<std::size_t> next();

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_size_;
  std::size_t cursor_ = 0;
  Rng rng_;
};

std::vector<model::Batch> eval_batches(const std::vector<objectives::PretrainExample>& examples,
                                       std::size_t batch_size);
std::vector<model::Batch> eval_batches(const std::vector<model::SeqPair>& pairs,
                                       std::size_t batch_size);

PretrainReport pretrain(model::Trainer<float>& trainer,
                        const std::vector<objectives::PretrainExample>& train,
                        const std::vector<objectives::PretrainExample>& valid, std::size_t steps,
                        std::size_t batch_size, std::size_t eval_every, std::uint64_t seed);

/// Returns the mean training loss of each `eval_every` window.
std::vector<CurvePoint> finetune(model::Trainer<float>& trainer,
                                 const std::vector<model::SeqPair>& train, std::size_t steps,
                                 std::size_t batch_size, std::size_t eval_every,
                                 std::uint64_t seed);

nlohmann::json curve_json(const std::vector<CurvePoint>& curve);
nlohmann::json draws_json(const DrawCounts& totals, const std::vector<DrawCounts>& per_batch);

/// pre-train, fine-tune, decode and score. Writes checkpoints, decodes,
/// rouge.json and manifest.json under paths.output_dir and returns the
/// manifest. Metrics depend only on the config and input files.
nlohmann::json run_experiment(const RunConfig& config);

}  // namespace seqpt::pipeline
