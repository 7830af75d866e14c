#include "ovrun/encoding.h"

#include <filesystem>
#include <random>

#include "gtest/gtest.h"
#include "ovrun/corpus.h"
#include "ovrun/errors.h"

namespace ovrun {
namespace {

TEST(TokenizeTest, RoundTripsGeneratedLines) {
  GenConfig cfg;
  cfg.level = Level::kL4;
  cfg.num_samples = 300;
  for (const ProgramSample& s : GenerateCorpus(cfg)) {
    for (const std::string& line : s.story_lines) {
      EXPECT_EQ(Detokenize(Tokenize(line)), line);
    }
    EXPECT_EQ(Detokenize(Tokenize(s.query_line)), s.query_line);
  }
  EXPECT_EQ(Tokenize("  a   b\tc "), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(Tokenize("").empty());
}

TEST(VocabularyTest, ReservedEntriesAndFirstOccurrenceOrder) {
  const std::vector<std::string> lines = {"int entity_1 ;", "entity_1 = 5 ;"};
  const Vocabulary v = Vocabulary::FromLines(lines);
  ASSERT_EQ(v.size(), 7u);
  EXPECT_EQ(v.Token(Vocabulary::kPad), "<pad>");
  EXPECT_EQ(v.Token(Vocabulary::kUnk), "<unk>");
  EXPECT_EQ(v.Id("int"), 2u);
  EXPECT_EQ(v.Id("entity_1"), 3u);
  EXPECT_EQ(v.Id("5"), 6u);
  EXPECT_EQ(v.Id("never_seen"), Vocabulary::kUnk);
  EXPECT_FALSE(v.Contains("never_seen"));
  for (TokenId id = 0; id < v.size(); ++id) EXPECT_EQ(v.Id(v.Token(id)), id);
}

TEST(VocabularyTest, SaveLoadAndValidation) {
  GenConfig cfg;
  cfg.level = Level::kL4;
  cfg.num_samples = 500;
  const Vocabulary v = Vocabulary::FromCorpus(GenerateCorpus(cfg));
  const auto path = std::filesystem::temp_directory_path() / "ovrun_vocab.txt";
  v.Save(path);
  EXPECT_EQ(Vocabulary::Load(path), v);
  std::filesystem::remove(path);
  EXPECT_THROW(Vocabulary::FromTokens({"a", "b"}), DataError);
  EXPECT_THROW(Vocabulary::FromTokens({"<pad>", "<unk>", "x", "x"}),
               DataError);
  EXPECT_THROW(Vocabulary::Load("/nonexistent/vocab.txt"), DataError);
}

TEST(VocabularyTest, DefaultTrainingCorpusSize) {
  GenConfig cfg;
  cfg.level = Level::kL4;
  cfg.mixed_levels = true;
  cfg.num_samples = 10000;
  cfg.seed = 1;
  const Vocabulary v = Vocabulary::FromCorpus(GenerateCorpus(cfg));
  EXPECT_GE(v.size(), 150u);
  EXPECT_LE(v.size(), 260u);
}

TEST(PositionWeightsTest, ClosedFormEntries) {
  const Matrix l = PositionWeights(6, 32);
  EXPECT_NEAR(l(0, 0), 0.8125, 1e-15);  // j = k = 1, J = 6, d = 32
  for (std::size_t k = 1; k <= 32; ++k) {
    EXPECT_NEAR(l(5, k - 1), k / 32.0, 1e-15);  // j = J
    EXPECT_NEAR(l(2, k - 1), 0.5, 1e-15);       // 2j = J
  }
  const Matrix single = PositionWeights(1, 4);
  for (std::size_t k = 1; k <= 4; ++k) {
    EXPECT_NEAR(single(0, k - 1), k / 4.0, 1e-15);
  }
}

TEST(PositionTableTest, MatchesDirectComputation) {
  const PositionTable table(9, 5);
  EXPECT_EQ(table.max_words(), 9u);
  for (std::size_t t = 1; t <= 9; ++t) {
    EXPECT_EQ(table.ForLength(t), PositionWeights(t, 5));
  }
  EXPECT_THROW(table.ForLength(10), EncodingError);
}

Matrix RandomTable(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& x : m.values()) x = n(rng);
  for (double& x : m.row(0)) x = 0.0;
  return m;
}

TEST(EncodeLineTest, WeightedSumOfRows) {
  const Matrix table = RandomTable(8, 4, 1);
  const std::vector<TokenId> ids = {3, 5, 2};
  const Vector m = EncodeLine(ids, table, 10);
  const Matrix l = PositionWeights(3, 4);
  for (std::size_t k = 0; k < 4; ++k) {
    const double want = l(0, k) * table(3, k) + l(1, k) * table(5, k) +
                        l(2, k) * table(2, k);
    EXPECT_NEAR(m[k], want, 1e-14);
  }
  EXPECT_EQ(EncodeLine(ids, table, PositionTable(10, 4)), m);
  EXPECT_EQ(EncodeLine(std::vector<TokenId>{}, table, 10), Vector(4, 0.0));
  EXPECT_THROW(EncodeLine(ids, table, 2), EncodingError);
  EXPECT_THROW(EncodeLine(std::vector<TokenId>{9}, table, 10), ContractError);
}

// Swapping two distinct tokens of a line generally changes its encoding.
TEST(EncodeLineTest, SensitiveToWordOrder) {
  const Matrix table = RandomTable(8, 6, 2);
  const std::vector<TokenId> a = {2, 3, 4, 5};
  const std::vector<TokenId> b = {5, 3, 4, 2};
  const Vector ma = EncodeLine(a, table, 8);
  const Vector mb = EncodeLine(b, table, 8);
  double diff = 0.0;
  for (std::size_t k = 0; k < 6; ++k) diff += std::abs(ma[k] - mb[k]);
  EXPECT_GT(diff, 1e-6);
}

TEST(EncodeLineTest, LinearInTheTable) {
  const Matrix a = RandomTable(8, 5, 3);
  const Matrix b = RandomTable(8, 5, 4);
  Matrix sum(8, 5);
  for (std::size_t i = 0; i < sum.size(); ++i) {
    sum.values()[i] = 2.0 * a.values()[i] - 0.5 * b.values()[i];
  }
  const std::vector<TokenId> ids = {7, 1, 4, 4, 6};
  const Vector ea = EncodeLine(ids, a, 8);
  const Vector eb = EncodeLine(ids, b, 8);
  const Vector es = EncodeLine(ids, sum, 8);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_NEAR(es[k], 2.0 * ea[k] - 0.5 * eb[k], 1e-12);
  }
}

TEST(EncodeTest, PadsToCapacity) {
  GenConfig cfg;
  cfg.level = Level::kL3;
  cfg.num_samples = 20;
  const auto corpus = GenerateCorpus(cfg);
  const Vocabulary v = Vocabulary::FromCorpus(corpus);
  const std::size_t width = MaxLineWidth(corpus);
  EXPECT_EQ(width, 9u);  // memset ( entity_1 , 'c' , entity_2 ) ;
  for (const ProgramSample& s : corpus) {
    const EncodedSample e = Encode(s, v, 30, width);
    EXPECT_EQ(e.num_lines, s.story_lines.size());
    EXPECT_EQ(e.story_ids.size(), 30 * width);
    EXPECT_EQ(e.label, ToInt(s.label));
    for (std::size_t i = e.num_lines; i < 30; ++i) {
      EXPECT_EQ(e.story_lengths[i], 0u);
    }
    for (std::size_t i = 0; i < e.num_lines; ++i) {
      std::vector<std::string> toks;
      for (TokenId id : e.line(i)) toks.push_back(v.Token(id));
      EXPECT_EQ(Detokenize(toks), s.story_lines[i]);
    }
    EXPECT_THROW(Encode(s, v, s.story_lines.size() - 1, width), CapacityError);
    EXPECT_THROW(Encode(s, v, 30, 3), EncodingError);
  }
}

TEST(EncodeTest, UnseenTokensMapToUnknown) {
  ProgramSample s;
  s.story_lines = {"void fun ( ) {"};
  s.query_line = "mystery ;";
  const Vocabulary v = Vocabulary::FromLines(s.story_lines);
  const EncodedSample e = Encode(s, v, 4, 6);
  EXPECT_EQ(e.query()[0], Vocabulary::kUnk);
  EXPECT_EQ(e.query()[1], Vocabulary::kUnk);
}

}  // namespace
}  // namespace ovrun
