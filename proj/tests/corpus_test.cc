#include "ovrun/corpus.h"

#include <map>
#include <regex>
#include <set>

#include "gtest/gtest.h"
#include "ovrun/encoding.h"
#include "ovrun/errors.h"

namespace ovrun {
namespace {

GenConfig Config(Level level, std::size_t n, std::uint64_t seed = 11) {
  GenConfig cfg;
  cfg.level = level;
  cfg.num_samples = n;
  cfg.seed = seed;
  return cfg;
}

// Syntactic features of a story, found without interpreting it.
struct Features {
  bool copy_access = false;
  bool int_sized_alloc = false;
  bool int_reassigned = false;
};

Features Scan(const ProgramSample& s) {
  static const std::regex kIntSized(R"(malloc \( entity_\d+ \))");
  static const std::regex kIntAssign(R"(^(entity_\d+) = \d+ ;$)");
  Features f;
  f.copy_access = s.query_line.starts_with("strcpy") ||
                  s.query_line.starts_with("memcpy");
  std::map<std::string, int> assignments;
  for (const std::string& line : s.story_lines) {
    if (std::regex_search(line, kIntSized)) f.int_sized_alloc = true;
    std::smatch m;
    if (std::regex_match(line, m, kIntAssign) && ++assignments[m[1]] > 1) {
      f.int_reassigned = true;
    }
  }
  return f;
}

TEST(GenConfigTest, RejectsInvalidSettings) {
  GenConfig cfg = Config(Level::kL1, 1);
  cfg.max_dummy_vars = cfg.max_entities;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = Config(Level::kL1, 0);
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = Config(Level::kL1, 1);
  cfg.safe_ratio = 1.5;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = Config(Level::kL1, 1);
  cfg.int_range = {5, 5};
  EXPECT_THROW(cfg.Validate(), ConfigError);
  EXPECT_THROW(LevelFromInt(5), ConfigError);
  EXPECT_EQ(LevelFromInt(3), Level::kL3);
}

TEST(GeneratorTest, LevelOneShape) {
  const auto corpus = GenerateCorpus(Config(Level::kL1, 200));
  const std::regex query(R"(^entity_\d+ \[ entity_\d+ \] = '[a-zA-Z]' ;$)");
  for (const ProgramSample& s : corpus) {
    EXPECT_EQ(s.story_lines.front(), "void fun ( ) {");
    EXPECT_TRUE(std::regex_match(s.query_line, query)) << s.query_line;
    bool literal_malloc = false, memset_follows = false;
    for (std::size_t i = 0; i + 1 < s.story_lines.size(); ++i) {
      if (std::regex_search(s.story_lines[i],
                            std::regex(R"(malloc \( \d+ \))"))) {
        literal_malloc = true;
        memset_follows = s.story_lines[i + 1].starts_with("memset");
      }
    }
    EXPECT_TRUE(literal_malloc);
    EXPECT_TRUE(memset_follows);
  }
}

TEST(GeneratorTest, LevelContainment) {
  for (int level = 1; level <= 4; ++level) {
    const auto corpus = GenerateCorpus(Config(LevelFromInt(level), 2000));
    Features seen;
    for (const ProgramSample& s : corpus) {
      const Features f = Scan(s);
      if (level < 2) EXPECT_FALSE(f.copy_access) << s.query_line;
      if (level < 3) EXPECT_FALSE(f.int_sized_alloc);
      if (level < 4) EXPECT_FALSE(f.int_reassigned);
      seen.copy_access |= f.copy_access;
      seen.int_sized_alloc |= f.int_sized_alloc;
      seen.int_reassigned |= f.int_reassigned;
    }
    // Each level actually exercises its own construct.
    EXPECT_EQ(seen.copy_access, level >= 2);
    EXPECT_EQ(seen.int_sized_alloc, level >= 3);
    EXPECT_EQ(seen.int_reassigned, level >= 4);
  }
}

TEST(GeneratorTest, LineCountsAndNames) {
  const std::regex entity(R"(entity_(\d+))");
  for (int level = 1; level <= 4; ++level) {
    GenConfig cfg = Config(LevelFromInt(level), 1000, 5);
    const auto corpus = GenerateCorpus(cfg);
    for (const ProgramSample& s : corpus) {
      EXPECT_GE(s.line_count(), 8u);
      EXPECT_LE(s.line_count(), 33u);
      std::vector<std::string> lines = s.story_lines;
      lines.push_back(s.query_line);
      for (const std::string& line : lines) {
        for (const std::string& tok : Tokenize(line)) {
          if (!tok.starts_with("entity")) continue;
          std::smatch m;
          ASSERT_TRUE(std::regex_match(tok, m, entity)) << tok;
          EXPECT_LE(std::stoi(m[1]), cfg.max_entities);
        }
      }
    }
  }
}

TEST(GeneratorTest, BalanceTracksSafeRatio) {
  for (double ratio : {0.5, 0.3}) {
    GenConfig cfg = Config(Level::kL4, 10000, 2);
    cfg.safe_ratio = ratio;
    const CorpusStats st = Summarize(GenerateCorpus(cfg));
    EXPECT_LT(std::abs(st.unsafe_fraction() - (1.0 - ratio)), 0.02);
  }
}

TEST(GeneratorTest, DeterministicAndIndexAddressable) {
  GenConfig cfg = Config(Level::kL4, 50, 99);
  const auto a = GenerateCorpus(cfg);
  EXPECT_EQ(a, GenerateCorpus(cfg));
  std::mt19937_64 rng = SampleStream(99, 17);
  EXPECT_EQ(GenerateSample(cfg, rng), a[17]);
  cfg.seed = 100;
  EXPECT_NE(a, GenerateCorpus(cfg));
}

TEST(GeneratorTest, MetaMatchesStory) {
  const auto corpus = GenerateCorpus(Config(Level::kL4, 500, 3));
  for (const ProgramSample& s : corpus) {
    ASSERT_GE(s.meta.dest_alloc_line, 0);
    const std::string dest = "entity_" + std::to_string(s.meta.dest_entity);
    const std::string& line = s.story_lines.at(s.meta.dest_alloc_line);
    EXPECT_TRUE(line.starts_with(dest + " = malloc (")) << line;
    EXPECT_LE(s.meta.num_dummies, 4);
    EXPECT_TRUE(s.meta.used_indirect_alloc);
    EXPECT_TRUE(s.meta.used_realloc);
  }
}

TEST(GeneratorTest, MixedLevelsCoverEveryLevel) {
  GenConfig cfg = Config(Level::kL4, 2000, 8);
  cfg.mixed_levels = true;
  std::map<Level, int> counts;
  for (const ProgramSample& s : GenerateCorpus(cfg)) ++counts[s.meta.level];
  ASSERT_EQ(counts.size(), 4u);
  for (const auto& [level, n] : counts) EXPECT_NEAR(n, 500, 80);
}

TEST(GeneratorTest, IntegerLiteralsStayInRange) {
  GenConfig cfg = Config(Level::kL4, 1000, 4);
  const std::regex number(R"(^\d+$)");
  std::set<int> seen;
  for (const ProgramSample& s : GenerateCorpus(cfg)) {
    for (const std::string& line : s.story_lines) {
      for (const std::string& tok : Tokenize(line)) {
        if (!std::regex_match(tok, number)) continue;
        const int v = std::stoi(tok);
        EXPECT_GE(v, 1);
        EXPECT_LE(v, 100);
        seen.insert(v);
      }
    }
  }
  EXPECT_EQ(seen.size(), 100u);
}

TEST(SummarizeTest, CountsAndHistogram) {
  const auto corpus = GenerateCorpus(Config(Level::kL2, 300));
  const CorpusStats st = Summarize(corpus);
  EXPECT_EQ(st.num_samples, 300u);
  EXPECT_EQ(st.num_safe + st.num_unsafe, 300u);
  std::size_t total = 0;
  for (const auto& [lines, n] : st.line_histogram) {
    EXPECT_GE(lines, st.min_lines);
    EXPECT_LE(lines, st.max_lines);
    total += n;
  }
  EXPECT_EQ(total, 300u);
  EXPECT_EQ(st.access_form_counts.size(), 3u);
  EXPECT_EQ(Summarize({}).num_samples, 0u);
}

TEST(AccessFormTest, RoundTrips) {
  for (AccessForm f :
       {AccessForm::kDirect, AccessForm::kStrcpy, AccessForm::kMemcpy}) {
    EXPECT_EQ(AccessFormFromString(ToString(f)), f);
  }
  EXPECT_THROW(AccessFormFromString("memmove"), DataError);
}

}  // namespace
}  // namespace ovrun
