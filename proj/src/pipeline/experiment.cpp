#include "seqpt/pipeline/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "seqpt/analysis/reorder.hpp"
#include "seqpt/decoding/tuning.hpp"
#include "seqpt/model/checkpoint.hpp"
#include "seqpt/pipeline/data.hpp"
#include "seqpt/pipeline/hashing.hpp"
#include "seqpt/pipeline/ingest.hpp"
#include "seqpt/rouge/rouge.hpp"
#include "seqpt/text/segment.hpp"

namespace seqpt::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::validate() const {
  const bool pretraining = objective != "none";
  if (pretraining) parse_objective_choice(objective);
  if (pretraining && paths.corpus.empty()) throw InvalidArgument("paths.corpus is required");
  if (paths.train_pairs.empty()) throw InvalidArgument("paths.train_pairs is required");
  if (paths.test_pairs.empty()) throw InvalidArgument("paths.test_pairs is required");
  if (paths.output_dir.empty()) throw InvalidArgument("paths.output_dir is required");
  for (const auto* p : {&paths.corpus, &paths.train_pairs, &paths.valid_pairs, &paths.test_pairs}) {
    if (!p->empty() && !fs::exists(*p)) throw InvalidArgument("no such file: " + *p);
  }
  if (nsg_split != "random" && nsg_split != "piece-boundary") {
    throw InvalidArgument("nsg_split must be random or piece-boundary");
  }
  if (!(valid_fraction >= 0.0 && valid_fraction < 1.0)) {
    throw InvalidArgument("valid_fraction must be in [0, 1)");
  }
  if (batch_size == 0 || eval_every == 0 || piece_len == 0) {
    throw InvalidArgument("batch_size, eval_every and piece_len must be positive");
  }
  if ((tune_min_len || beam_sweep) && paths.valid_pairs.empty()) {
    throw InvalidArgument("min-length tuning and the beam sweep need paths.valid_pairs");
  }
  rouge::parse_protocol(protocol);
  objective_config().span.validate();
  model.validate();
  decode.validate();
}

objectives::ObjectiveConfig RunConfig::objective_config() const {
  objectives::ObjectiveConfig cfg;
  cfg.span = {span_min, span_max};
  cfg.target_len = target_len;
  cfg.split_mode = nsg_split == "piece-boundary" ? objectives::SplitMode::kPieceBoundary
                                                 : objectives::SplitMode::kRandom;
  cfg.limits = {max_source_len, max_target_len};
  return cfg;
}

BatchSampler::BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : order_(n), batch_size_(batch_size), rng_(seed) {
  if (n == 0) throw EmptyDataset("no training examples");
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  std::iota(order_.begin(), order_.end(), 0);
}

std::vector<std::size_t> BatchSampler::next() {
  std::vector<std::size_t> out;
  const std::size_t want = std::min(batch_size_, order_.size());
  while (out.size() < want) {
    if (cursor_ == 0) rng_.shuffle(std::span<std::size_t>(order_));
    out.push_back(order_[cursor_]);
    if (++cursor_ == order_.size()) cursor_ = 0;
  }
  return out;
}

namespace {

template <typename Item>
std::vector<model::Batch> chunk(const std::vector<Item>& items, std::size_t batch_size) {
  std::vector<model::Batch> out;
  for (std::size_t i = 0; i < items.size(); i += batch_size) {
    const std::size_t n = std::min(batch_size, items.size() - i);
    out.push_back(model::make_batch(std::span<const Item>(items.data() + i, n)));
  }
  return out;
}

template <typename F>
auto run_stage(const char* name, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

json rouge_table(const std::vector<rouge::TextPair>& pairs, rouge::Protocol protocol) {
  json table = json::object();
  for (auto v : {rouge::Variant::kRouge1, rouge::Variant::kRouge2, rouge::Variant::kRougeL}) {
    const auto s = rouge::score_corpus(pairs, v, protocol);
    table[std::string(rouge::to_string(v))] = {{"precision", s.precision},
                                               {"recall", s.recall},
                                               {"f1", s.f1},
                                               {"headline", rouge::headline(s, protocol)}};
  }
  return table;
}

std::vector<DocPair> load_pairs(const std::string& path, std::size_t limit) {
  if (path.empty()) return {};
  auto pairs = read_pairs_jsonl(path);
  if (limit > 0 && pairs.size() > limit) pairs.resize(limit);
  return pairs;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

std::vector<model::Batch> eval_batches(const std::vector<objectives::PretrainExample>& examples,
                                       std::size_t batch_size) {
  return chunk(examples, batch_size);
}

std::vector<model::Batch> eval_batches(const std::vector<model::SeqPair>& pairs,
                                       std::size_t batch_size) {
  return chunk(pairs, batch_size);
}

PretrainReport pretrain(model::Trainer<float>& trainer,
                        const std::vector<objectives::PretrainExample>& train,
                        const std::vector<objectives::PretrainExample>& valid, std::size_t steps,
                        std::size_t batch_size, std::size_t eval_every, std::uint64_t seed) {
  PretrainReport report;
  const auto valid_batches = eval_batches(valid, batch_size);
  if (!valid_batches.empty()) report.valid_perplexity.push_back({0, trainer.perplexity(valid_batches)});
  BatchSampler sampler(train.size(), batch_size, seed);
  double window = 0.0;
  std::size_t window_n = 0;
  for (std::size_t step = 1; step <= steps; ++step) {
    std::vector<objectives::PretrainExample> chosen;
    DrawCounts counts{};
    for (std::size_t i : sampler.next()) {
      chosen.push_back(train[i]);
      ++counts[static_cast<std::size_t>(train[i].objective)];
    }
    window += trainer.train_step(model::make_batch(chosen));
    ++window_n;
    for (std::size_t k = 0; k < 3; ++k) report.draws[k] += counts[k];
    report.per_batch_draws.push_back(counts);
    if (step % eval_every == 0 || step == steps) {
      report.train_loss.push_back({step, window / static_cast<double>(window_n)});
      window = 0.0;
      window_n = 0;
      if (!valid_batches.empty()) {
        report.valid_perplexity.push_back({step, trainer.perplexity(valid_batches)});
      }
    }
  }
  return report;
}

std::vector<CurvePoint> finetune(model::Trainer<float>& trainer,
                                 const std::vector<model::SeqPair>& train, std::size_t steps,
                                 std::size_t batch_size, std::size_t eval_every,
                                 std::uint64_t seed) {
  std::vector<CurvePoint> curve;
  BatchSampler sampler(train.size(), batch_size, seed);
  double window = 0.0;
  std::size_t window_n = 0;
  for (std::size_t step = 1; step <= steps; ++step) {
    std::vector<model::SeqPair> chosen;
    for (std::size_t i : sampler.next()) chosen.push_back(train[i]);
    window += trainer.train_step(model::make_batch(chosen));
    ++window_n;
    if (step % eval_every == 0 || step == steps) {
      curve.push_back({step, window / static_cast<double>(window_n)});
      window = 0.0;
      window_n = 0;
    }
  }
  return curve;
}

json curve_json(const std::vector<CurvePoint>& curve) {
  json out = json::array();
  for (const auto& p : curve) out.push_back({{"step", p.step}, {"value", p.value}});
  return out;
}

json draws_json(const DrawCounts& totals, const std::vector<DrawCounts>& per_batch) {
  const double n = static_cast<double>(totals[0] + totals[1] + totals[2]);
  json counts = json::object(), fractions = json::object();
  for (auto obj : objectives::kAllObjectives) {
    const auto k = static_cast<std::size_t>(obj);
    const std::string name(objectives::to_string(obj));
    counts[name] = totals[k];
    fractions[name] = n > 0 ? static_cast<double>(totals[k]) / n : 0.0;
  }
  json batches = json::array();
  for (const auto& c : per_batch) batches.push_back({c[0], c[1], c[2]});
  return {{"counts", counts}, {"fractions", fractions}, {"per_batch", batches}};
}

json run_experiment(const RunConfig& input_config) {
  RunConfig config = input_config;
  run_stage("config", [&] {
    config.validate();
    fs::create_directories(config.paths.output_dir);
    return 0;
  });
  const fs::path out_dir(config.paths.output_dir);
  const auto started = std::chrono::steady_clock::now();

  json manifest;
  manifest["seed"] = config.seed;
  manifest["config"] = config;
  manifest["config_hash"] = config_hash(manifest["config"]);
  json inputs = json::object();
  for (const auto* p : {&config.paths.corpus, &config.paths.train_pairs, &config.paths.valid_pairs,
                        &config.paths.test_pairs, &config.paths.vocab}) {
    if (!p->empty() && fs::exists(*p)) inputs[*p] = file_hash(*p);
  }
  manifest["inputs"] = inputs;

  const bool pretraining = config.objective != "none";
  const auto objective_cfg = config.objective_config();
  std::vector<text::RawDocument> docs;
  std::vector<DocPair> train_pairs, valid_pairs, test_pairs;
  run_stage("load", [&] {
    if (pretraining) docs = ingest_jsonl(config.paths.corpus).docs;
    train_pairs = load_pairs(config.paths.train_pairs, 0);
    valid_pairs = load_pairs(config.paths.valid_pairs, config.max_eval_pairs);
    test_pairs = load_pairs(config.paths.test_pairs, config.max_eval_pairs);
    if (test_pairs.empty()) throw EmptyDataset("no test pairs");
    return 0;
  });

  const auto vocab = run_stage("vocab", [&] {
    const std::string path =
        config.paths.vocab.empty() ? (out_dir / "vocab.txt").string() : config.paths.vocab;
    if (fs::exists(path)) return text::Vocabulary::load(path);
    std::vector<text::RawDocument> material = docs;
    for (const auto& p : train_pairs) {
      material.push_back({"pair:" + p.id, p.document});
      material.push_back({"summary:" + p.id, p.summary});
    }
    auto v = text::train_bpe(material, config.vocab_size);
    v.save(path);
    return v;
  });
  manifest["vocab_hash"] = git_blob_hash([&] {
    std::ostringstream s;
    vocab.save(s);
    return s.str();
  }());
  config.model.vocab_size = vocab.size();
  manifest["model_config"] = config.model;

  model::Trainer<float> trainer(config.model, config.pretrain_optimizer,
                                derive_seed(config.seed, "model"));
  const model::Seq2SeqParams<float> untrained = trainer.params();
  json metrics;
  const json ckpt_meta = {{"seed", config.seed}, {"config_hash", manifest["config_hash"]}};

  if (pretraining) {
    run_stage("pretrain", [&] {
      const auto n_valid = static_cast<std::size_t>(
          std::ceil(config.valid_fraction * static_cast<double>(docs.size())));
      const std::vector<text::RawDocument> held_out(docs.end() - static_cast<std::ptrdiff_t>(n_valid),
                                                    docs.end());
      docs.resize(docs.size() - n_valid);
      const auto choice = parse_objective_choice(config.objective);
      const auto train = make_pretrain_data(docs, vocab, choice, objective_cfg,
                                            derive_seed(config.seed, "pretrain-data"),
                                            config.piece_len);
      const auto valid = make_pretrain_data(held_out, vocab, choice, objective_cfg,
                                            derive_seed(config.seed, "valid-data"),
                                            config.piece_len);
      if (train.empty()) throw EmptyDataset("corpus produced no pre-training examples");
      const auto report = pretrain(trainer, train, valid, config.pretrain_steps, config.batch_size,
                                   config.eval_every, derive_seed(config.seed, "pretrain-batches"));
      json section = {{"objective", config.objective},
                      {"n_train_examples", train.size()},
                      {"n_valid_examples", valid.size()},
                      {"valid_perplexity", curve_json(report.valid_perplexity)},
                      {"train_loss", curve_json(report.train_loss)}};
      if (!choice) section["objective_draws"] = draws_json(report.draws, report.per_batch_draws);
      metrics["pretrain"] = section;
      model::save_checkpoint((out_dir / "pretrained.ckpt").string(), trainer, ckpt_meta);
      return 0;
    });
  }

  run_stage("finetune", [&] {
    trainer.reset_optimizer(config.finetune_optimizer);
    const auto data =
        make_finetune_data(train_pairs, vocab, config.max_source_len, config.max_target_len);
    if (data.empty()) throw EmptyDataset("no usable training pairs");
    metrics["finetune"] = {
        {"n_pairs", data.size()},
        {"train_loss", curve_json(finetune(trainer, data, config.finetune_steps, config.batch_size,
                                           config.eval_every,
                                           derive_seed(config.seed, "finetune-batches")))}};
    model::save_checkpoint((out_dir / "finetuned.ckpt").string(), trainer, ckpt_meta);
    return 0;
  });

  const auto protocol = rouge::parse_protocol(config.protocol);
  const auto test_items = make_eval_items(test_pairs, vocab, config.max_source_len);
  const auto valid_items = make_eval_items(valid_pairs, vocab, config.max_source_len);
  std::vector<TokenSeq> test_sources;
  for (const auto& item : test_items) test_sources.push_back(item.source);

  std::vector<decoding::Decoded> decoded, baseline;
  run_stage("decode", [&] {
    if (config.tune_min_len) {
      const auto tuned = decoding::tune_min_length(
          trainer.params(), config.model, vocab, valid_items, config.min_len_lo, config.min_len_hi,
          config.min_len_step, config.decode, config.workers);
      metrics["min_len_tuning"] = decoding::min_len_table_json(tuned);
      config.decode.min_len = tuned.best;
      config.decode.max_len = std::max(config.decode.max_len, tuned.best);
    }
    decoded = decoding::decode_corpus(trainer.params(), config.model, vocab, test_sources,
                                      config.decode, config.workers);
    baseline = decoding::decode_corpus(untrained, config.model, vocab, test_sources, config.decode,
                                       config.workers);
    std::ofstream out(out_dir / "decodes.jsonl");
    if (!out) throw Error("cannot write decodes.jsonl");
    std::vector<std::string> ids;
    for (const auto& p : test_pairs) ids.push_back(p.id);
    write_decodes_jsonl(out, ids, decoded);
    return 0;
  });

  run_stage("score", [&] {
    std::vector<rouge::TextPair> model_pairs, baseline_pairs, lead_pairs;
    for (std::size_t i = 0; i < test_items.size(); ++i) {
      model_pairs.push_back({decoded[i].text, test_items[i].reference});
      baseline_pairs.push_back({baseline[i].text, test_items[i].reference});
      lead_pairs.push_back(
          {analysis::lead3(text::segment_sentences(test_pairs[i].document)), test_items[i].reference});
    }
    json rouge = {{"protocol", config.protocol},
                  {"n_pairs", test_items.size()},
                  {"decode", config.decode},
                  {"model", rouge_table(model_pairs, protocol)},
                  {"untrained", rouge_table(baseline_pairs, protocol)},
                  {"lead3", rouge_table(lead_pairs, protocol)}};
    metrics["rouge"] = rouge;
    write_json(out_dir / "rouge.json", rouge);
    if (config.beam_sweep) {
      metrics["beam_sweep"] = decoding::beam_table_json(
          decoding::beam_sweep(trainer.params(), config.model, vocab, valid_items,
                               config.sweep_beams, config.decode, config.workers));
    }
    return 0;
  });

  manifest["metrics"] = metrics;
  json outputs = json::object();
  for (const char* name : {"pretrained.ckpt", "finetuned.ckpt", "decodes.jsonl", "rouge.json"}) {
    if (fs::exists(out_dir / name)) outputs[name] = file_hash((out_dir / name).string());
  }
  manifest["outputs"] = outputs;
  manifest["elapsed_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_json(out_dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace seqpt::pipeline
