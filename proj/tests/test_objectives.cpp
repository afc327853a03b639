#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "seqpt/error.hpp"
#include "seqpt/objectives/example_io.hpp"
#include "seqpt/objectives/objectives.hpp"
#include "seqpt/objectives/rng.hpp"

using namespace seqpt;
using namespace seqpt::objectives;

namespace {

TokenSeq range_seq(TokenId from, std::size_t n) {
  TokenSeq s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = from + static_cast<TokenId>(i);
  return s;
}

std::vector<TokenSeq> random_sentences(Rng& rng, std::size_t m, std::size_t max_len) {
  std::vector<TokenSeq> out;
  for (std::size_t i = 0; i < m; ++i) {
    TokenSeq s(static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_len))));
    for (auto& t : s) t = static_cast<TokenId>(rng.uniform_int(5, 260));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    differs |= x != c.next();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, StateRoundTrip) {
  Rng a(5);
  a.next();
  const auto saved = a.state();
  const auto x = a.uniform_int(0, 1000);
  Rng b;
  b.restore(saved);
  EXPECT_EQ(b.uniform_int(0, 1000), x);
}

TEST(Rng, DerivedSeedsDependOnKey) {
  EXPECT_EQ(derive_seed(1, "doc#0"), derive_seed(1, "doc#0"));
  EXPECT_NE(derive_seed(1, "doc#0"), derive_seed(1, "doc#1"));
  EXPECT_NE(derive_seed(1, "doc#0"), derive_seed(2, "doc#0"));
}

TEST(SentenceReorder, FollowsDrawnOrder) {
  const std::vector<TokenSeq> s = {{10, 11}, {20}, {30, 31, 32}};
  // Find a seed that draws (3,1,2) and check the layout it implies.
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    const auto ex = sentence_reorder(s, rng);
    const auto& order = std::get<ReorderMeta>(ex.meta).order;
    if (order != std::vector<std::size_t>{3, 1, 2}) continue;
    EXPECT_EQ(ex.input, (TokenSeq{30, 31, 32, 10, 11, 20}));
    EXPECT_EQ(ex.target, (TokenSeq{10, 11, 20, 30, 31, 32}));
    return;
  }
  FAIL() << "no seed produced (3,1,2)";
}

TEST(SentenceReorder, SingleSentenceIsIdentity) {
  Rng rng(1);
  const std::vector<TokenSeq> s = {{7, 8, 9}};
  const auto ex = sentence_reorder(s, rng);
  EXPECT_EQ(ex.input, ex.target);
  EXPECT_EQ(std::get<ReorderMeta>(ex.meta).order, std::vector<std::size_t>{1});
}

TEST(SentenceReorder, EmptyDocumentThrows) {
  Rng rng(1);
  EXPECT_THROW(sentence_reorder(std::vector<TokenSeq>{}, rng), EmptyDocument);
}

TEST(SentenceReorder, InvariantsOnRandomDocuments) {
  Rng gen(9);
  const TransformLimits limits{40, 20};
  for (int trial = 0; trial < 2000; ++trial) {
    const auto s = random_sentences(gen, static_cast<std::size_t>(gen.uniform_int(1, 8)), 12);
    Rng rng(derive_seed(3, static_cast<std::uint64_t>(trial)));
    const auto ex = sentence_reorder(s, rng, limits);
    ASSERT_EQ(oracle::check_sr(ex, s, limits), "");
  }
}

TEST(SentenceReorder, PermutationsAreUniform) {
  const std::vector<TokenSeq> s = {{1 + 4}, {2 + 4}, {3 + 4}};
  std::map<std::vector<std::size_t>, int> counts;
  Rng rng(77);
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[std::get<ReorderMeta>(sentence_reorder(s, rng).meta).order];
  ASSERT_EQ(counts.size(), 6u);
  // Binomial sd is about 91 at p = 1/6; 5 sd bound.
  for (const auto& [order, c] : counts) EXPECT_NEAR(c, n / 6, 460);
}

TEST(NextSegment, FixedSplitExample) {
  const auto seq = range_seq(100, 10);  // t1..t10
  const auto ex = next_segment_at(seq, 6, 4);
  EXPECT_EQ(ex.input, range_seq(100, 6));
  EXPECT_EQ(ex.target, range_seq(106, 4));
}

TEST(NextSegment, FullLengthTarget) {
  const auto seq = range_seq(5, 512 + 256);
  const auto ex = next_segment_at(seq, 512, 256);
  EXPECT_EQ(ex.target.size(), 256u);
  EXPECT_EQ(ex.input.size(), 512u);
}

TEST(NextSegment, ErrorsAndContiguity) {
  Rng rng(2);
  EXPECT_THROW(next_segment_split(TokenSeq{5}, rng), TooShort);
  const TransformLimits limits{7, 5};
  for (int trial = 0; trial < 2000; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 30));
    const auto seq = range_seq(5, n);
    const auto target_len = static_cast<std::size_t>(rng.uniform_int(1, 9));
    const auto ex = next_segment_split(seq, rng, target_len, limits);
    ASSERT_EQ(oracle::check_nsg(ex, seq, target_len, limits), "");
  }
}

TEST(MaskDocument, DegenerateBoundsCoverWholePiece) {
  text::Vocabulary vocab;
  Rng rng(3);
  const auto piece = range_seq(5, 20);
  const auto ex = mask_document(piece, {20, 20}, {}, rng, vocab);
  const auto& meta = std::get<MaskMeta>(ex.meta);
  EXPECT_EQ(meta.start, 1u);
  EXPECT_EQ(meta.length, 20u);
  EXPECT_EQ(ex.target, piece);
}

TEST(MaskDocument, DefaultBoundsOnFullPiece) {
  text::Vocabulary vocab;
  Rng rng(4);
  const auto piece = range_seq(5, 512);
  for (int i = 0; i < 200; ++i) {
    const auto ex = mask_document(piece, {}, {}, rng, vocab, {512, 512});
    const auto& meta = std::get<MaskMeta>(ex.meta);
    EXPECT_GE(meta.length, 100u);
    EXPECT_LE(meta.length, 256u);
    EXPECT_GE(meta.start, 1u);
    EXPECT_LE(meta.start, 512 - meta.length + 1);
    ASSERT_EQ(oracle::check_mdg(ex, piece, {}, vocab, {512, 512}), "");
  }
}

TEST(MaskDocument, TooShortAndBadPolicy) {
  text::Vocabulary vocab;
  Rng rng(5);
  EXPECT_THROW(mask_document(range_seq(5, 50), {100, 256}, {}, rng, vocab), TooShort);
  EXPECT_THROW(mask_document(range_seq(5, 50), {10, 20}, {0.5, 0.5, 0.5}, rng, vocab),
               InvalidArgument);
  EXPECT_THROW(mask_document(range_seq(5, 50), {30, 20}, {}, rng, vocab), InvalidArgument);
}

TEST(Mixing, SingleShortSentenceFallsBackToSr) {
  text::Vocabulary vocab;
  PieceContext piece{"p", {{5, 6, 7}}, {}};
  ObjectiveConfig cfg;
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto ex = mix_all(piece, rng, vocab, cfg);
    EXPECT_EQ(ex.objective, Objective::kSentenceReorder);
    EXPECT_EQ(ex.input, ex.target);
  }
}

TEST(Mixing, NoFeasibleObjective) {
  text::Vocabulary vocab;
  PieceContext piece{"p", {}, {}};
  Rng rng(8);
  EXPECT_THROW(mix_all(piece, rng, vocab, {}), NoFeasibleObjective);
}

TEST(Mixing, RoughlyOneThirdEachAndDeterministic) {
  text::Vocabulary vocab;
  PieceContext piece{"p", {range_seq(5, 60), range_seq(70, 60)}, range_seq(200, 30)};
  ObjectiveConfig cfg;
  cfg.span = {20, 40};
  Rng a(10), b(10);
  std::array<int, 3> counts{};
  for (int i = 0; i < 30000; ++i) {
    const auto oa = draw_objective(piece, a, cfg);
    ASSERT_EQ(oa, draw_objective(piece, b, cfg));
    ++counts[static_cast<std::size_t>(oa)];
  }
  for (int c : counts) {
    EXPECT_GE(c, 9000);
    EXPECT_LE(c, 11000);
  }
}

TEST(ExampleIo, RoundTrip) {
  text::Vocabulary vocab;
  PieceContext piece{"doc#0", {range_seq(5, 30), range_seq(40, 30)}, range_seq(100, 10)};
  ObjectiveConfig cfg;
  cfg.span = {5, 10};
  std::vector<PretrainExample> examples;
  Rng rng(1);
  for (auto o : kAllObjectives) examples.push_back(apply_objective(o, piece, rng, vocab, cfg));
  std::stringstream buf;
  write_examples_jsonl(buf, examples);
  const auto back = read_examples_jsonl(buf);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].id, examples[i].id);
    EXPECT_EQ(back[i].objective, examples[i].objective);
    EXPECT_EQ(back[i].input, examples[i].input);
    EXPECT_EQ(back[i].target, examples[i].target);
    EXPECT_EQ(back[i].meta.index(), examples[i].meta.index());
  }
  EXPECT_EQ(std::get<MaskMeta>(back[2].meta).actions, std::get<MaskMeta>(examples[2].meta).actions);
  std::stringstream bad("{\"id\":\"x\"}\n");
  EXPECT_THROW(read_examples_jsonl(bad), MalformedRecord);
}
