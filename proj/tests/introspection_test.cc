#include "ovrun/introspection.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "gtest/gtest.h"
#include "ovrun/corpus.h"
#include "ovrun/errors.h"

namespace ovrun {
namespace {

namespace fs = std::filesystem;

std::string ReadAll(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class IntrospectionTest : public ::testing::Test {
 protected:
  void SetUp() override {
    GenConfig cfg;
    cfg.level = Level::kL3;
    cfg.num_samples = 50;
    corpus_ = GenerateCorpus(cfg);
    vocab_ = Vocabulary::FromCorpus(corpus_);
    params_ = ModelParams::Random({vocab_.size(), 8, 30, 3}, 4);
    dir_ = fs::temp_directory_path() /
           (std::string("ovrun_introspection_") +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::vector<ProgramSample> corpus_;
  Vocabulary vocab_;
  ModelParams params_;
  fs::path dir_;
};

TEST_F(IntrospectionTest, TraceCoversStoryAndPadding) {
  const TraceReport r = Trace(corpus_[0], params_, vocab_);
  EXPECT_EQ(r.story, corpus_[0].story_lines);
  EXPECT_EQ(r.trace.attention.size(), 3u);
  EXPECT_EQ(r.confidence, PredictionConfidence(r.trace.score));
  EXPECT_EQ(r.prediction, r.trace.prediction());
  const auto argmax = r.ArgmaxLines();
  ASSERT_EQ(argmax.size(), 3u);
  for (std::size_t a : argmax) EXPECT_LT(a, r.story.size());

  const std::string text = FormatTrace(r);
  EXPECT_NE(text.find(corpus_[0].query_line), std::string::npos);
  EXPECT_NE(text.find("<empty> x"), std::string::npos);
  const std::string json = TraceToJson(r);
  EXPECT_NE(json.find("\"argmax_lines\""), std::string::npos);
}

TEST(ConfidenceTest, Definition) {
  EXPECT_DOUBLE_EQ(PredictionConfidence(0.5), 0.0);
  EXPECT_DOUBLE_EQ(PredictionConfidence(1.0), 1.0);
  EXPECT_DOUBLE_EQ(PredictionConfidence(0.0), 1.0);
  EXPECT_DOUBLE_EQ(PredictionConfidence(0.25), 0.5);
}

TEST(NumericValueTest, OnlyPlainIntegers) {
  EXPECT_EQ(NumericValue("42"), 42);
  EXPECT_EQ(NumericValue("100"), 100);
  EXPECT_FALSE(NumericValue("entity_4"));
  EXPECT_FALSE(NumericValue("'a'"));
  EXPECT_FALSE(NumericValue("4a"));
  EXPECT_FALSE(NumericValue(""));
}

TEST(EmbeddingTableTest, Names) {
  EXPECT_EQ(EmbeddingTableFromString("addr"), EmbeddingTable::kAddress);
  EXPECT_EQ(EmbeddingTableFromString("value"), EmbeddingTable::kValue);
  EXPECT_EQ(ToString(EmbeddingTable::kValue), "value");
  EXPECT_THROW(EmbeddingTableFromString("query"), ConfigError);
}

TEST_F(IntrospectionTest, AtlasSortsNumbers) {
  const EmbeddingAtlas atlas =
      EmbeddingAtlas::Build(vocab_, params_, EmbeddingTable::kValue);
  EXPECT_EQ(atlas.tokens.size(), vocab_.size() - 1);
  EXPECT_EQ(atlas.vectors.rows(), atlas.tokens.size());
  ASSERT_GE(atlas.numeric_values.size(), 2u);
  for (std::size_t i = 1; i < atlas.numeric_values.size(); ++i) {
    EXPECT_LT(atlas.numeric_values[i - 1], atlas.numeric_values[i]);
  }
  for (std::size_t i = 0; i < atlas.numeric_subset.size(); ++i) {
    EXPECT_EQ(NumericValue(atlas.tokens[atlas.numeric_subset[i]]),
              atlas.numeric_values[i]);
  }
  const TokenId id = vocab_.Id(atlas.tokens[0]);
  for (std::size_t k = 0; k < 8; ++k) {
    EXPECT_EQ(atlas.vectors(0, k), params_.value_embedding(id, k));
  }
}

TEST_F(IntrospectionTest, GeometryIsSymmetricWithUnitDiagonal) {
  const NumberGeometry g = ComputeNumberGeometry(
      EmbeddingAtlas::Build(vocab_, params_, EmbeddingTable::kAddress));
  const std::size_t n = g.values.size();
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_NEAR(g.cosine(i, i), 1.0, 1e-12);
    EXPECT_EQ(g.l2(i, i), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      EXPECT_DOUBLE_EQ(g.cosine(i, j), g.cosine(j, i));
      EXPECT_DOUBLE_EQ(g.l2(i, j), g.l2(j, i));
    }
  }
  EXPECT_TRUE(g.undefined_cosine.empty());
}

TEST(GeometryTest, ZeroVectorCosineIsUndefined) {
  const Vocabulary vocab = Vocabulary::FromTokens({"<pad>", "<unk>", "1", "2"});
  ModelParams p = ModelParams::Zeros({4, 3, 2, 1});
  p.address_embedding(2, 0) = 1.0;
  const NumberGeometry g = ComputeNumberGeometry(
      EmbeddingAtlas::Build(vocab, p, EmbeddingTable::kAddress));
  EXPECT_TRUE(std::isnan(g.cosine(0, 1)));
  EXPECT_FALSE(g.undefined_cosine.empty());
  EXPECT_DOUBLE_EQ(g.l2(0, 1), 1.0);
}

TEST(SpearmanTest, KnownValues) {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  EXPECT_NEAR(Spearman(x, std::vector<double>{2, 4, 6, 8, 10}), 1.0, 1e-12);
  EXPECT_NEAR(Spearman(x, std::vector<double>{5, 4, 3, 2, 1}), -1.0, 1e-12);
  // ties take their average rank: ranks (1.5, 1.5, 3) vs (1, 2, 3)
  EXPECT_NEAR(Spearman(std::vector<double>{1, 1, 2},
                       std::vector<double>{1, 2, 3}),
              std::sqrt(3.0) / 2.0, 1e-12);
  EXPECT_THROW(Spearman(x, std::vector<double>{1, 2}), ContractError);
}

TEST(SpearmanTest, MonotoneEmbeddingGivesPerfectDistanceCorrelation) {
  std::vector<std::string> tokens = {"<pad>", "<unk>"};
  for (int v = 1; v <= 20; ++v) tokens.push_back(std::to_string(v));
  const Vocabulary vocab = Vocabulary::FromTokens(tokens);
  ModelParams p = ModelParams::Zeros({vocab.size(), 2, 2, 1});
  for (int v = 1; v <= 20; ++v) {
    p.address_embedding(vocab.Id(std::to_string(v)), 0) = v * 0.125;  // exact, so equal gaps tie
    p.address_embedding(vocab.Id(std::to_string(v)), 1) = 1.0;
  }
  const NumberGeometry g = ComputeNumberGeometry(
      EmbeddingAtlas::Build(vocab, p, EmbeddingTable::kAddress));
  EXPECT_NEAR(DistanceRankCorrelation(g), 1.0, 1e-12);
}

TEST_F(IntrospectionTest, RandomEmbeddingsHaveNoDistanceCorrelation) {
  std::vector<std::string> tokens = {"<pad>", "<unk>"};
  for (int v = 1; v <= 100; ++v) tokens.push_back(std::to_string(v));
  const Vocabulary vocab = Vocabulary::FromTokens(tokens);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ModelParams p = ModelParams::Random({vocab.size(), 32, 30, 3}, seed);
    for (EmbeddingTable t : {EmbeddingTable::kAddress, EmbeddingTable::kValue}) {
      const double rho = DistanceRankCorrelation(
          ComputeNumberGeometry(EmbeddingAtlas::Build(vocab, p, t)));
      EXPECT_GT(rho, -0.2);
      EXPECT_LT(rho, 0.2);
    }
  }
}

TEST_F(IntrospectionTest, ExportsAreDeterministic) {
  const EmbeddingAtlas atlas =
      EmbeddingAtlas::Build(vocab_, params_, EmbeddingTable::kAddress);
  ExportEmbeddings(atlas, dir_ / "a.csv", false);
  ExportEmbeddings(atlas, dir_ / "b.csv", false);
  const std::string a = ReadAll(dir_ / "a.csv");
  EXPECT_EQ(a, ReadAll(dir_ / "b.csv"));
  EXPECT_TRUE(a.starts_with("token,value,c0,"));
  // header plus one row per non-padding token
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'),
            static_cast<long>(vocab_.size()));
  EXPECT_NE(a.find("\",\""), std::string::npos);  // the comma token is quoted

  ExportEmbeddings(atlas, dir_ / "n.csv", true);
  const std::string n = ReadAll(dir_ / "n.csv");
  EXPECT_EQ(std::count(n.begin(), n.end(), '\n'),
            static_cast<long>(atlas.numeric_subset.size() + 1));
}

TEST_F(IntrospectionTest, HeatmapHasPpmHeader) {
  Matrix m(3, 2);
  m(0, 0) = -1.0;
  m(2, 1) = std::nan("");
  WriteHeatmapPpm(dir_ / "h.ppm", m, -1.0, 1.0, 2);
  const std::string img = ReadAll(dir_ / "h.ppm");
  const std::string header = "P6\n4 6\n255\n";
  ASSERT_TRUE(img.starts_with(header));
  EXPECT_EQ(img.size(), header.size() + 4 * 6 * 3);
  // top-left cell is pure blue, the NaN cell black
  EXPECT_EQ(static_cast<unsigned char>(img[header.size() + 2]), 255);
  EXPECT_EQ(static_cast<unsigned char>(img[header.size()]), 0);
  const std::size_t nan_px = header.size() + (4 * 4 + 2) * 3;
  EXPECT_EQ(img.substr(nan_px, 3), std::string(3, '\0'));

  WriteMatrixCsv(dir_ / "m.csv", {"a", "b", "c"}, {"x", "y"}, m);
  EXPECT_TRUE(ReadAll(dir_ / "m.csv").starts_with("token,x,y\na,-1"));
}

}  // namespace
}  // namespace ovrun
