#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <set>
#include <tuple>

#include "oracles.hpp"
#include "seqpt/decoding/beam.hpp"
#include "seqpt/decoding/tuning.hpp"
#include "seqpt/error.hpp"
#include "seqpt/model/transformer.hpp"
#include "seqpt/rouge/rouge.hpp"

using namespace seqpt;
using namespace seqpt::decoding;
using model::ModelConfig;
using model::Seq2SeqParams;

namespace {

ModelConfig tiny_config(std::size_t vocab) {
  ModelConfig c;
  c.enc_layers = 1;
  c.dec_layers = 1;
  c.d_model = 8;
  c.n_heads = 2;
  c.enc_ffn = 16;
  c.dec_ffn = 16;
  c.enc_dropout = 0.0;
  c.dec_dropout = 0.0;
  c.vocab_size = vocab;
  c.max_positions = 64;
  c.embedding_init_std = 0.7;
  return c;
}

TokenSeq random_source(Rng& rng, std::size_t vocab, std::size_t max_len) {
  TokenSeq s(static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_len))));
  for (auto& t : s) t = static_cast<TokenId>(rng.uniform_int(5, static_cast<std::int64_t>(vocab) - 1));
  return s;
}

bool has_repeated_trigram(const TokenSeq& s) {
  std::set<std::tuple<TokenId, TokenId, TokenId>> seen;
  for (std::size_t i = 0; i + 2 < s.size(); ++i) {
    if (!seen.insert({s[i], s[i + 1], s[i + 2]}).second) return true;
  }
  return false;
}

}  // namespace

TEST(Trigram, BlocksRepeatOnly) {
  const TokenSeq h{1, 5, 6, 7, 5, 6};
  EXPECT_FALSE(trigram_allowed(h, 7));
  EXPECT_TRUE(trigram_allowed(h, 8));
  EXPECT_TRUE(trigram_allowed(TokenSeq{1, 5}, 5));
  EXPECT_TRUE(trigram_allowed(TokenSeq{}, 5));
  EXPECT_FALSE(trigram_allowed(TokenSeq{9, 9, 9}, 9));
}

TEST(DecodeConfig, RejectsBadValues) {
  DecodeConfig c;
  c.beam_size = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.max_len = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Beam, FullWidthMatchesExhaustiveSearch) {
  const auto cfg = tiny_config(8);
  Rng rng(21);
  const auto params = model::init_params<double>(cfg, rng);
  DecodeConfig dc;
  dc.beam_size = 700;
  dc.max_len = 4;
  dc.min_len = 1;
  dc.block_repeated_trigrams = false;
  const TokenSeq alphabet{4, 5, 6, 7};
  for (int trial = 0; trial < 10; ++trial) {
    const auto source = random_source(rng, 8, 6);
    double best = -INFINITY;
    TokenSeq content;
    std::function<void()> walk = [&] {
      if (!content.empty()) best = std::max(best, oracle::teacher_forced_log_prob(params, cfg, source, content, true));
      if (content.size() == 3) return;
      for (TokenId t : alphabet) {
        content.push_back(t);
        walk();
        content.pop_back();
      }
    };
    walk();
    const auto h = beam_search(params, cfg, source, dc);
    EXPECT_TRUE(h.finished);
    EXPECT_NEAR(h.log_prob, best, 1e-9);
  }
}

TEST(Beam, WidthOneIsGreedy) {
  const auto cfg = tiny_config(20);
  Rng rng(22);
  const auto params = model::init_params<double>(cfg, rng);
  DecodeConfig dc;
  dc.beam_size = 1;
  dc.max_len = 12;
  for (int i = 0; i < 30; ++i) {
    const auto source = random_source(rng, 20, 8);
    const auto b = beam_search(params, cfg, source, dc);
    const auto g = greedy_decode(params, cfg, source, dc);
    EXPECT_EQ(b.tokens, g.tokens);
    EXPECT_EQ(b.log_prob, g.log_prob);
  }
}

TEST(Beam, LogProbMatchesTeacherForcing) {
  const auto cfg = tiny_config(20);
  Rng rng(23);
  const auto params = model::init_params<double>(cfg, rng);
  DecodeConfig dc;
  dc.beam_size = 3;
  dc.max_len = 10;
  for (int i = 0; i < 10; ++i) {
    const auto source = random_source(rng, 20, 8);
    const auto h = beam_search(params, cfg, source, dc);
    EXPECT_NEAR(h.log_prob, oracle::teacher_forced_log_prob(params, cfg, source, h.content(), h.finished), 1e-9);
    EXPECT_NEAR(h.log_prob, sequence_log_prob(params, cfg, source, h.tokens), 1e-9);
  }
}

TEST(Beam, ConstraintsHold) {
  const auto cfg = tiny_config(20);
  Rng rng(24);
  const auto params = model::init_params<double>(cfg, rng);
  DecodeConfig dc;
  dc.beam_size = 4;
  dc.min_len = 5;
  dc.max_len = 15;
  std::size_t unblocked_repeats = 0;
  for (int i = 0; i < 40; ++i) {
    const auto source = random_source(rng, 20, 8);
    const auto h = beam_search(params, cfg, source, dc);
    ASSERT_EQ(h.tokens.front(), text::special::kBos);
    const auto content = h.content();
    if (h.finished) {
      EXPECT_EQ(h.tokens.back(), text::special::kEos);
      EXPECT_GE(content.size(), dc.min_len);
    } else {
      EXPECT_EQ(h.tokens.size() - 1, dc.max_len);
    }
    EXPECT_LE(h.tokens.size() - 1, dc.max_len);
    EXPECT_FALSE(has_repeated_trigram(h.tokens));
    for (TokenId t : content) {
      EXPECT_NE(t, text::special::kPad);
      EXPECT_NE(t, text::special::kMask);
      EXPECT_NE(t, text::special::kBos);
      EXPECT_NE(t, text::special::kEos);
    }
    DecodeConfig open = dc;
    open.block_repeated_trigrams = false;
    unblocked_repeats += has_repeated_trigram(beam_search(params, cfg, source, open).tokens);
  }
  // The blocking check above is only meaningful if the model repeats itself otherwise.
  EXPECT_GT(unblocked_repeats, 0u);
}

TEST(Beam, Deterministic) {
  const auto cfg = tiny_config(20);
  Rng rng(25);
  const auto params = model::init_params<double>(cfg, rng);
  const auto source = random_source(rng, 20, 8);
  DecodeConfig dc;
  dc.max_len = 12;
  const auto a = beam_search(params, cfg, source, dc);
  const auto b = beam_search(params, cfg, source, dc);
  EXPECT_EQ(a.tokens, b.tokens);
  EXPECT_EQ(a.log_prob, b.log_prob);
}

namespace {

struct ByteModel {
  ModelConfig cfg = [] {
    auto c = tiny_config(text::special::kCount + 256);
    c.max_positions = 300;
    c.embedding_init_std = 0.3;
    return c;
  }();
  Seq2SeqParams<float> params;
  text::Vocabulary vocab;
  std::vector<EvalItem> items;

  explicit ByteModel(std::uint64_t seed) {
    Rng rng(seed);
    params = model::init_params<float>(cfg, rng);
    for (const char* s : {"the cat sat", "a dog ran far", "birds sing"}) {
      items.push_back({vocab.encode(std::string(" ") + s), s});
    }
  }
};

}  // namespace

TEST(Tuning, MinLengthTable) {
  ByteModel m(26);
  DecodeConfig base;
  base.beam_size = 2;
  base.max_len = 100;
  const auto r = tune_min_length(m.params, m.cfg, m.vocab, m.items, 30, 80, 5, base);
  ASSERT_EQ(r.table.size(), 11u);
  for (std::size_t i = 0; i < 11; ++i) EXPECT_EQ(r.table[i].value, 30 + 5 * i);
  double best = -1.0;
  std::size_t arg = 0;
  for (const auto& row : r.table) {
    if (row.rouge_l > best) {
      best = row.rouge_l;
      arg = row.value;
    }
  }
  EXPECT_EQ(r.best, arg);

  const auto single = tune_min_length(m.params, m.cfg, m.vocab, m.items, 40, 40, 5, base);
  ASSERT_EQ(single.table.size(), 1u);
  EXPECT_EQ(single.best, 40u);
  EXPECT_THROW(tune_min_length(m.params, m.cfg, m.vocab, m.items, 50, 40, 5, base), InvalidArgument);
}

TEST(Tuning, AllEqualScoresPickLowest) {
  ByteModel m(27);
  // Zero token table: uniform next-token distribution, so every candidate
  // decodes to a string sharing nothing with the references.
  m.params.token_embedding.setZero();
  for (auto& item : m.items) item.reference = "zzzz";
  const auto r = tune_min_length(m.params, m.cfg, m.vocab, m.items, 10, 30, 5);
  for (const auto& row : r.table) EXPECT_EQ(row.rouge_l, 0.0);
  EXPECT_EQ(r.best, 10u);
}

TEST(Tuning, BeamSweepHasTenRowsAndGreedyFirst) {
  ByteModel m(28);
  DecodeConfig base;
  base.max_len = 20;
  const auto rows = beam_sweep(m.params, m.cfg, m.vocab, m.items, default_sweep_beams(), base);
  ASSERT_EQ(rows.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(rows[i].value, i + 1);

  std::vector<rouge::TextPair> pairs;
  DecodeConfig greedy = base;
  greedy.beam_size = 1;
  for (const auto& item : m.items) {
    const auto h = greedy_decode(m.params, m.cfg, item.source, greedy);
    std::string text = m.vocab.decode(h.content());
    const auto b = text.find_first_not_of(" \t\n\r");
    text = b == std::string::npos ? "" : text.substr(b, text.find_last_not_of(" \t\n\r") - b + 1);
    pairs.push_back({text, item.reference});
  }
  const double expected =
      rouge::score_corpus(pairs, rouge::Variant::kRougeL, rouge::Protocol::kFullLengthF1).f1;
  EXPECT_NEAR(rows[0].rouge_l, expected, 1e-12);
  EXPECT_EQ(beam_table_json(rows)["rows"].size(), 10u);
}

TEST(Tuning, WorkerCountDoesNotChangeOutput) {
  ByteModel m(29);
  DecodeConfig dc;
  dc.max_len = 16;
  std::vector<TokenSeq> sources;
  for (const auto& item : m.items) sources.push_back(item.source);
  const auto one = decode_corpus(m.params, m.cfg, m.vocab, sources, dc, 1);
  const auto three = decode_corpus(m.params, m.cfg, m.vocab, sources, dc, 3);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    EXPECT_EQ(one[i].text, three[i].text);
    EXPECT_EQ(one[i].log_prob, three[i].log_prob);
  }
}

TEST(Tuning, EmptyItemsThrow) {
  ByteModel m(30);
  EXPECT_THROW(decode_and_score(m.params, m.cfg, m.vocab, {}, DecodeConfig{}), EmptyDataset);
}
