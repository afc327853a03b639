#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "seqpt/error.hpp"
#include "seqpt/model/batch.hpp"
#include "seqpt/model/checkpoint.hpp"
#include "seqpt/model/optimizer.hpp"
#include "seqpt/model/trainer.hpp"
#include "seqpt/model/transformer.hpp"

using namespace seqpt;
using namespace seqpt::model;

namespace {

ModelConfig small_config(std::size_t layers = 2, std::size_t heads = 2) {
  ModelConfig c;
  c.enc_layers = layers;
  c.dec_layers = layers;
  c.d_model = 16;
  c.n_heads = heads;
  c.enc_ffn = 32;
  c.dec_ffn = 24;
  c.enc_dropout = 0.0;
  c.dec_dropout = 0.0;
  c.vocab_size = 37;
  c.max_positions = 32;
  return c;
}

text::TokenSeq random_tokens(Rng& rng, std::size_t n, std::size_t vocab) {
  text::TokenSeq s(n);
  for (auto& t : s) t = static_cast<text::TokenId>(rng.uniform_int(5, static_cast<std::int64_t>(vocab) - 1));
  return s;
}

std::vector<SeqPair> random_pairs(Rng& rng, std::size_t n, std::size_t vocab, std::size_t max_len) {
  std::vector<SeqPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ls = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_len)));
    const auto lt = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_len)));
    out.push_back({random_tokens(rng, ls, vocab), random_tokens(rng, lt, vocab)});
  }
  return out;
}

template <typename T>
bool same_params(Seq2SeqParams<T> a, Seq2SeqParams<T> b) {
  auto ta = tensors(a), tb = tensors(b);
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (*ta[i].value != *tb[i].value) return false;
  }
  return true;
}

}  // namespace

TEST(Forward, LogitShape) {
  const auto cfg = small_config();
  Rng rng(1);
  const auto params = init_params<double>(cfg, rng);
  std::vector<SeqPair> pairs{{random_tokens(rng, 7, 37), random_tokens(rng, 4, 37)},
                             {random_tokens(rng, 3, 37), random_tokens(rng, 2, 37)}};
  const auto batch = make_batch(pairs);
  const auto fwd = forward(params, cfg, batch);
  ASSERT_EQ(fwd.logits.size(), 2u);
  for (const auto& l : fwd.logits) {
    EXPECT_EQ(l.rows(), 5);
    EXPECT_EQ(l.cols(), 37);
  }
}

TEST(Forward, ZeroOutputTableGivesZeroLogits) {
  auto cfg = small_config();
  cfg.tie_embeddings = false;
  Rng rng(2);
  auto params = init_params<double>(cfg, rng);
  params.output_projection.setZero();
  const std::vector<SeqPair> pairs{{random_tokens(rng, 5, 37), random_tokens(rng, 6, 37)}};
  const auto fwd = forward(params, cfg, make_batch(pairs));
  EXPECT_EQ(fwd.logits[0].cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forward, DecoderIsCausal) {
  for (std::size_t layers : {1, 2}) {
    for (std::size_t heads : {1, 2, 4}) {
      const auto cfg = small_config(layers, heads);
      Rng rng(10 * layers + heads);
      const auto params = init_params<double>(cfg, rng);
      const auto source = random_tokens(rng, 6, 37);
      const auto target = random_tokens(rng, 8, 37);
      const std::vector<SeqPair> base{{source, target}};
      const auto ref = forward(params, cfg, make_batch(base)).logits[0];
      for (std::size_t t = 0; t < target.size(); ++t) {
        auto changed = target;
        changed[t] = changed[t] == 5 ? 6 : 5;
        const std::vector<SeqPair> probe{{source, changed}};
        const auto got = forward(params, cfg, make_batch(probe)).logits[0];
        // Label t sits at row t and only sees decoder inputs 0..t; token t enters at input t+1.
        for (std::size_t r = 0; r <= t; ++r) {
          EXPECT_LE((got.row(r) - ref.row(r)).cwiseAbs().maxCoeff(), 1e-12)
              << "layers=" << layers << " heads=" << heads << " t=" << t << " row=" << r;
        }
        EXPECT_GT((got.row(t + 1) - ref.row(t + 1)).cwiseAbs().maxCoeff(), 0.0);
      }
    }
  }
}

TEST(Forward, AttentionRowsSumToOne) {
  const auto cfg = small_config(2, 4);
  Rng rng(3);
  const auto params = init_params<double>(cfg, rng);
  auto pairs = random_pairs(rng, 3, 37, 9);
  const auto fwd = forward(params, cfg, make_batch(pairs));
  for (const auto& ex : fwd.cache) {
    auto check = [](const AttentionCache<double>& a) {
      for (const auto& p : a.probs) {
        for (Eigen::Index r = 0; r < p.rows(); ++r) EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-12);
        EXPECT_GE(p.minCoeff(), 0.0);
      }
    };
    for (const auto& l : ex.encoder) check(l.self_attn);
    for (const auto& l : ex.decoder) {
      check(l.self_attn);
      check(l.cross_attn);
    }
  }
}

TEST(Forward, RejectsOutOfVocabularyIds) {
  const auto cfg = small_config();
  Rng rng(4);
  const auto params = init_params<double>(cfg, rng);
  const std::vector<SeqPair> pairs{{{5, 6, 37}, {7}}};
  EXPECT_THROW(forward(params, cfg, make_batch(pairs)), ShapeMismatch);
}

TEST(Loss, UniformLogitsGiveLogVocab) {
  const std::vector<SeqPair> pairs{{{5, 6}, {7, 8, 9}}, {{5}, {10}}};
  const auto batch = make_batch(pairs);
  std::vector<Matrix<double>> logits(2, Matrix<double>::Zero(static_cast<Eigen::Index>(batch.target_len), 37));
  EXPECT_NEAR(loss(logits, batch).value, std::log(37.0), 1e-12);
}

TEST(Loss, ConfidentCorrectLogitsGiveSmallLoss) {
  const std::vector<SeqPair> pairs{{{5, 6}, {7, 8}}};
  const auto batch = make_batch(pairs);
  Matrix<double> l = Matrix<double>::Zero(static_cast<Eigen::Index>(batch.target_len), 37);
  for (std::size_t t = 0; t < batch.target_len; ++t) l(static_cast<Eigen::Index>(t), batch.labels[t]) = 30.0;
  EXPECT_LT(loss(std::vector<Matrix<double>>{l}, batch).value, 1e-10);
}

TEST(Loss, PaddedPositionsDoNotContribute) {
  const auto cfg = small_config();
  Rng rng(5);
  const auto params = init_params<double>(cfg, rng);
  const SeqPair a{random_tokens(rng, 4, 37), random_tokens(rng, 3, 37)};
  const std::vector<SeqPair> alone{a};
  const auto batch = make_batch(alone);
  // Same example with three extra padded label positions and padded source.
  Batch padded = batch;
  padded.target_len += 3;
  padded.source_len += 2;
  padded.source = a.source;
  padded.source.resize(padded.source_len, text::special::kPad);
  padded.source_mask.assign(padded.source_len, 0);
  std::fill_n(padded.source_mask.begin(), a.source.size(), 1);
  padded.decoder_input.resize(padded.target_len, text::special::kPad);
  padded.labels.resize(padded.target_len, text::special::kPad);
  padded.label_mask.resize(padded.target_len, 0);
  EXPECT_NEAR(loss_only(params, cfg, batch), loss_only(params, cfg, padded), 1e-12);
}

TEST(Loss, AllPaddedThrows) {
  const std::vector<SeqPair> pairs{{{5}, {}}};
  auto batch = make_batch(pairs);
  std::fill(batch.label_mask.begin(), batch.label_mask.end(), 0);
  std::vector<Matrix<double>> logits(1, Matrix<double>::Zero(1, 37));
  EXPECT_THROW(loss(logits, batch), AllPadded);
}

TEST(Gradient, MatchesCentralDifferences) {
  const auto cfg = small_config();
  Rng rng(6);
  auto params = init_params<double>(cfg, rng);
  auto pairs = random_pairs(rng, 3, 37, 6);
  const auto batch = make_batch(pairs);
  const auto r = oracle::gradient_check(params, cfg, batch, 80, 17);
  EXPECT_LE(r.max_rel_error, 1e-5) << r.worst;
}

TEST(Gradient, MatchesCentralDifferencesUntied) {
  auto cfg = small_config(1, 2);
  cfg.tie_embeddings = false;
  Rng rng(7);
  auto params = init_params<double>(cfg, rng);
  auto pairs = random_pairs(rng, 2, 37, 5);
  const auto r = oracle::gradient_check(params, cfg, make_batch(pairs), 60, 18);
  EXPECT_LE(r.max_rel_error, 1e-5) << r.worst;
}

TEST(Gradient, UnusedPositionsGetZero) {
  const auto cfg = small_config();
  Rng rng(8);
  const auto params = init_params<double>(cfg, rng);
  auto pairs = random_pairs(rng, 2, 37, 5);
  const auto batch = make_batch(pairs);
  Seq2SeqParams<double> grads;
  loss_and_gradient(params, cfg, batch, grads);
  const auto& enc = grads.encoder_positions;
  const auto& dec = grads.decoder_positions;
  EXPECT_EQ(enc.bottomRows(enc.rows() - static_cast<Eigen::Index>(batch.source_len)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(dec.bottomRows(dec.rows() - static_cast<Eigen::Index>(batch.target_len)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(enc.topRows(1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gradient, DuplicatedBatchGivesSameGradient) {
  const auto cfg = small_config();
  Rng rng(9);
  const auto params = init_params<double>(cfg, rng);
  auto pairs = random_pairs(rng, 2, 37, 5);
  auto doubled = pairs;
  doubled.insert(doubled.end(), pairs.begin(), pairs.end());
  Seq2SeqParams<double> g1, g2;
  const double l1 = loss_and_gradient(params, cfg, make_batch(pairs), g1);
  const double l2 = loss_and_gradient(params, cfg, make_batch(doubled), g2);
  EXPECT_NEAR(l1, l2, 1e-12);
  auto t1 = tensors(g1), t2 = tensors(g2);
  for (std::size_t i = 0; i < t1.size(); ++i) {
    EXPECT_LE((*t1[i].value - *t2[i].value).cwiseAbs().maxCoeff(), 1e-12) << t1[i].name;
  }
}

TEST(Schedule, ClosedFormValues) {
  EXPECT_THROW(lr_schedule(0, 1e-4, 10000), InvalidArgument);
  for (std::size_t w : {10u, 4000u, 10000u}) {
    for (std::size_t s : {std::size_t{1}, w / 2, w, 4 * w, 7 * w + 3}) {
      EXPECT_NEAR(lr_schedule(s, 2e-5, w), oracle::schedule(s, 2e-5, w), 1e-20);
    }
    EXPECT_EQ(lr_schedule(w / 2, 1e-4, w), 1e-4 / 2);
    EXPECT_EQ(lr_schedule(w, 1e-4, w), 1e-4);
    EXPECT_EQ(lr_schedule(4 * w, 1e-4, w), 1e-4 / 2);
  }
}

TEST(Schedule, Defaults) {
  const auto pre = OptimizerConfig::pretrain_defaults();
  EXPECT_EQ(pre.encoder.peak_lr, 2e-5);
  EXPECT_EQ(pre.decoder.peak_lr, 1e-4);
  EXPECT_EQ(pre.encoder.warmup, 10000u);
  EXPECT_EQ(pre.decoder.warmup, 10000u);
  const auto fine = OptimizerConfig::finetune_defaults();
  EXPECT_EQ(fine.encoder.peak_lr, 2e-5);
  EXPECT_EQ(fine.decoder.peak_lr, 2e-5);
  EXPECT_EQ(fine.encoder.warmup, 4000u);
  EXPECT_EQ(fine.decoder.warmup, 4000u);
  EXPECT_EQ(pre.beta1, 0.9);
  EXPECT_EQ(pre.beta2, 0.98);
}

namespace {

OptimizerConfig fast_optimizer(double enc_lr, double dec_lr) {
  OptimizerConfig o;
  o.encoder = {enc_lr, 20};
  o.decoder = {dec_lr, 20};
  return o;
}

}  // namespace

TEST(Trainer, DeterministicGivenSeed) {
  auto cfg = small_config();
  cfg.enc_dropout = 0.1;
  cfg.dec_dropout = 0.3;
  Rng data(11);
  auto pairs = random_pairs(data, 4, 37, 6);
  const auto batch = make_batch(pairs);
  Trainer<float> a(cfg, fast_optimizer(1e-3, 1e-3), 5), b(cfg, fast_optimizer(1e-3, 1e-3), 5);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.train_step(batch), b.train_step(batch));
  EXPECT_TRUE(same_params(a.params(), b.params()));
}

TEST(Trainer, OverfitsSingleBatch) {
  auto cfg = small_config();
  cfg.d_model = 32;
  cfg.n_heads = 4;
  cfg.enc_ffn = 64;
  cfg.dec_ffn = 64;
  Rng data(12);
  auto pairs = random_pairs(data, 4, 37, 6);
  const auto batch = make_batch(pairs);
  Trainer<float> trainer(cfg, fast_optimizer(3e-3, 3e-3), 6);
  double final_loss = 1e9;
  for (int i = 0; i < 500 && final_loss >= 0.05; ++i) {
    trainer.train_step(batch);
    final_loss = loss_only(trainer.params(), cfg, batch);
  }
  EXPECT_LT(final_loss, 0.05);
}

TEST(Trainer, ZeroDecoderRateFreezesDecoder) {
  const auto cfg = small_config();
  Rng data(13);
  auto pairs = random_pairs(data, 3, 37, 6);
  const auto batch = make_batch(pairs);
  Trainer<float> trainer(cfg, fast_optimizer(1e-3, 0.0), 7);
  auto before = trainer.params();
  for (int i = 0; i < 5; ++i) trainer.train_step(batch);
  auto after = trainer.params();
  auto tb = tensors(before), ta = tensors(after);
  bool encoder_moved = false;
  for (std::size_t i = 0; i < tb.size(); ++i) {
    if (tb[i].group == ParamGroup::kDecoder) {
      EXPECT_EQ(*tb[i].value, *ta[i].value) << tb[i].name;
    } else if (*tb[i].value != *ta[i].value) {
      encoder_moved = true;
    }
  }
  EXPECT_TRUE(encoder_moved);
}

TEST(Trainer, NonFiniteLossLeavesStateUntouched) {
  const auto cfg = small_config();
  Rng data(14);
  auto pairs = random_pairs(data, 2, 37, 4);
  const auto batch = make_batch(pairs);
  Trainer<float> trainer(cfg, fast_optimizer(1e-3, 1e-3), 8);
  trainer.params().token_embedding(5, 0) = std::numeric_limits<float>::quiet_NaN();
  trainer.params().token_embedding.row(5).setConstant(std::numeric_limits<float>::infinity());
  const std::size_t steps = trainer.steps();
  const std::size_t enc_step = trainer.optimizer().encoder_step;
  EXPECT_THROW(trainer.train_step(batch), NonFiniteLoss);
  EXPECT_EQ(trainer.steps(), steps);
  EXPECT_EQ(trainer.optimizer().encoder_step, enc_step);
}

TEST(Perplexity, UntrainedNearVocabAndMatchesLoss) {
  const auto cfg = small_config();
  Trainer<double> trainer(cfg, fast_optimizer(1e-3, 1e-3), 9);
  Rng data(15);
  auto pairs = random_pairs(data, 3, 37, 6);
  const std::vector<Batch> batches{make_batch(pairs)};
  const double ppl = trainer.perplexity(batches);
  EXPECT_NEAR(ppl, 37.0, 37.0 * 0.05);
  EXPECT_NEAR(ppl, std::exp(loss_only(trainer.params(), cfg, batches[0])), 1e-9);
  EXPECT_THROW(trainer.perplexity(std::span<const Batch>{}), EmptyDataset);
}

TEST(Checkpoint, RoundTripAndExactResume) {
  auto cfg = small_config();
  cfg.enc_dropout = 0.1;
  Rng data(16);
  auto pairs = random_pairs(data, 3, 37, 6);
  const auto batch = make_batch(pairs);
  Trainer<float> trainer(cfg, fast_optimizer(1e-3, 1e-3), 10);
  for (int i = 0; i < 3; ++i) trainer.train_step(batch);
  const auto path = (std::filesystem::temp_directory_path() / "seqpt_ckpt_test.bin").string();
  save_checkpoint(path, trainer, {{"note", "x"}});
  nlohmann::json meta;
  auto restored = load_checkpoint<float>(path, &meta);
  EXPECT_EQ(meta["note"], "x");
  EXPECT_TRUE(same_params(trainer.params(), restored.params()));
  EXPECT_EQ(restored.steps(), 3u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(trainer.train_step(batch), restored.train_step(batch));
  EXPECT_TRUE(same_params(trainer.params(), restored.params()));
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsGarbage) {
  const auto path = (std::filesystem::temp_directory_path() / "seqpt_ckpt_garbage.bin").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "not a checkpoint";
  }
  EXPECT_THROW(load_checkpoint<float>(path), FormatError);
  std::filesystem::remove(path);
}
