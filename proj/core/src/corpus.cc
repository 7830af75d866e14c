#include "ovrun/corpus.h"

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>

#include "ovrun/errors.h"

namespace ovrun {

Level LevelFromInt(int level) {
  if (level < 1 || level > 4) {
    throw ConfigError("level must be in 1..4, got " + std::to_string(level));
  }
  return static_cast<Level>(level);
}

std::string_view ToString(AccessForm form) {
  switch (form) {
    case AccessForm::kDirect:
      return "direct";
    case AccessForm::kStrcpy:
      return "strcpy";
    case AccessForm::kMemcpy:
      return "memcpy";
  }
  return "direct";
}

AccessForm AccessFormFromString(std::string_view name) {
  if (name == "direct") return AccessForm::kDirect;
  if (name == "strcpy") return AccessForm::kStrcpy;
  if (name == "memcpy") return AccessForm::kMemcpy;
  throw DataError("unknown access form '" + std::string(name) + "'");
}

namespace {

// Distinct entities a sample of the given level may need for its real
// (non-dummy) variables.
int RequiredEntities(Level level) {
  switch (level) {
    case Level::kL1:
      return 2;  // dest, index
    case Level::kL2:
      return 3;  // dest, src, length
    default:
      return 5;  // + sizing ints for dest and src
  }
}

}  // namespace

void GenConfig::Validate() const {
  if (num_samples < 1) throw ConfigError("num_samples must be >= 1");
  if (max_entities < 1) throw ConfigError("max_entities must be >= 1");
  if (max_dummy_vars < 0) throw ConfigError("max_dummy_vars must be >= 0");
  if (max_dummy_vars >= max_entities) {
    throw ConfigError("max_dummy_vars (" + std::to_string(max_dummy_vars) +
                      ") must be < max_entities (" +
                      std::to_string(max_entities) + ")");
  }
  if (max_entities + 1 < RequiredEntities(level)) {
    throw ConfigError("max_entities too small for level " +
                      std::to_string(ToInt(level)));
  }
  if (int_range.lo < 1) throw ConfigError("int_range lower bound must be >= 1");
  if (int_range.hi <= int_range.lo) {
    throw ConfigError("int_range must contain at least two values");
  }
  if (!(safe_ratio > 0.0 && safe_ratio < 1.0)) {
    throw ConfigError("safe_ratio must lie in (0,1)");
  }
  if (min_target_lines < 1 || max_target_lines < min_target_lines) {
    throw ConfigError("invalid target line interval");
  }
}

std::mt19937_64 SampleStream(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(
                        static_cast<std::uint64_t>(index) >> 32),
                    0x6f76u};
  return std::mt19937_64(seq);
}

namespace {

std::string Entity(int id) { return "entity_" + std::to_string(id); }

// A group of allocation-stage lines that must appear contiguously, plus the
// groups that have to be emitted before it.
struct Unit {
  std::vector<std::string> lines;
  std::vector<int> after;
};

struct ArrayResult {
  int alloc_unit = -1;
  bool indirect = false;
  bool realloc = false;
};

class ProgramBuilder {
 public:
  ProgramBuilder(const GenConfig& cfg, std::mt19937_64& rng)
      : cfg_(cfg), rng_(rng) {
    pool_.resize(cfg.max_entities + 1);
    std::iota(pool_.begin(), pool_.end(), 0);
    std::shuffle(pool_.begin(), pool_.end(), rng_);
  }

  bool Coin(double p) { return std::bernoulli_distribution(p)(rng_); }

  int Uniform(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }

  int RandomValue() { return Uniform(cfg_.int_range.lo, cfg_.int_range.hi); }

  int DecoyFor(int value) {
    int v = RandomValue();
    while (v == value) v = RandomValue();
    return v;
  }

  std::string CharLiteral() {
    static constexpr std::string_view kAlphabet =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
    const char c = kAlphabet[Uniform(0, kAlphabet.size() - 1)];
    return std::string("'") + c + "'";
  }

  int entities_left() const { return static_cast<int>(pool_.size()) - used_; }

  int NewEntity() { return pool_[used_++]; }

  int AddUnit(std::vector<std::string> lines, std::vector<int> after = {}) {
    units_.push_back({std::move(lines), std::move(after)});
    return static_cast<int>(units_.size()) - 1;
  }

  int DeclareInt(int id, int value) {
    decls_.push_back("int " + Entity(id) + " ;");
    return AddUnit({Entity(id) + " = " + std::to_string(value) + " ;"});
  }

  void DeclareChar(int id) {
    decls_.push_back("char " + Entity(id) + " ;");
    AddUnit({Entity(id) + " = " + CharLiteral() + " ;"});
  }

  // Declares and allocates a char array whose effective size is `size`.
  // With `indirect`, the size goes through a fresh int entity; with
  // `realloc`, that int is reassigned before or after the malloc so that
  // the malloc still observes `size`.
  ArrayResult DeclareArray(int id, int size, bool indirect, bool realloc) {
    ArrayResult result;
    decls_.push_back("char * " + Entity(id) + " ;");
    if (!indirect || entities_left() == 0) {
      const std::string n = std::to_string(size);
      result.alloc_unit = AddUnit({Entity(id) + " = malloc ( " + n + " ) ;",
                                   "memset ( " + Entity(id) + " , " +
                                       CharLiteral() + " , " + n + " ) ;"});
      return result;
    }
    result.indirect = true;
    const int sizer = NewEntity();
    const std::string z = Entity(sizer);
    decls_.push_back("int " + z + " ;");
    std::vector<std::string> alloc = {
        Entity(id) + " = malloc ( " + z + " ) ;",
        "memset ( " + Entity(id) + " , " + CharLiteral() + " , " + z + " ) ;"};
    if (!realloc) {
      const int assign = AddUnit({z + " = " + std::to_string(size) + " ;"});
      result.alloc_unit = AddUnit(std::move(alloc), {assign});
      return result;
    }
    result.realloc = true;
    const int decoy = DecoyFor(size);
    if (Coin(0.5)) {
      // reassigned before use: the malloc sees the second value
      const int first = AddUnit({z + " = " + std::to_string(decoy) + " ;"});
      const int second =
          AddUnit({z + " = " + std::to_string(size) + " ;"}, {first});
      result.alloc_unit = AddUnit(std::move(alloc), {second});
    } else {
      const int first = AddUnit({z + " = " + std::to_string(size) + " ;"});
      result.alloc_unit = AddUnit(std::move(alloc), {first});
      AddUnit({z + " = " + std::to_string(decoy) + " ;"}, {result.alloc_unit});
    }
    return result;
  }

  std::size_t story_line_count() const {
    std::size_t n = 1 + decls_.size();  // header
    for (const Unit& u : units_) n += u.lines.size();
    return n;
  }

  // Assembles header, shuffled declarations and a random topological
  // interleaving of the allocation units. Returns the story and the first
  // story line of each unit.
  std::pair<std::vector<std::string>, std::vector<int>> Assemble() {
    std::vector<std::string> story;
    story.push_back("void fun ( ) {");
    std::shuffle(decls_.begin(), decls_.end(), rng_);
    story.insert(story.end(), decls_.begin(), decls_.end());

    std::vector<int> position(units_.size(), -1);
    std::vector<bool> done(units_.size(), false);
    for (std::size_t emitted = 0; emitted < units_.size(); ++emitted) {
      std::vector<int> ready;
      for (std::size_t u = 0; u < units_.size(); ++u) {
        if (done[u]) continue;
        const bool ok =
            std::all_of(units_[u].after.begin(), units_[u].after.end(),
                        [&](int dep) { return done[dep]; });
        if (ok) ready.push_back(static_cast<int>(u));
      }
      const int pick = ready[Uniform(0, static_cast<int>(ready.size()) - 1)];
      done[pick] = true;
      position[pick] = static_cast<int>(story.size());
      for (const std::string& line : units_[pick].lines) story.push_back(line);
    }
    return {std::move(story), std::move(position)};
  }

 private:
  const GenConfig& cfg_;
  std::mt19937_64& rng_;
  std::vector<int> pool_;
  int used_ = 0;
  std::vector<std::string> decls_;
  std::vector<Unit> units_;
};

// Draws (access, size) uniformly among pairs of the requested class.
// Direct indexing is 0-based, so index == size already overruns; a copy of
// exactly `size` bytes still fits.
std::pair<int, int> DrawAccessAndSize(ProgramBuilder& b, AccessForm form,
                                      Label label) {
  for (;;) {
    const int access = b.RandomValue();
    const int size = b.RandomValue();
    const bool unsafe =
        form == AccessForm::kDirect ? access >= size : access > size;
    if (unsafe == (label == Label::kUnsafe)) return {access, size};
  }
}

}  // namespace

ProgramSample GenerateSample(const GenConfig& cfg, std::mt19937_64& rng) {
  cfg.Validate();
  ProgramBuilder b(cfg, rng);
  const Level level = cfg.mixed_levels
                          ? static_cast<Level>(b.Uniform(1, ToInt(cfg.level)))
                          : cfg.level;
  const bool indirect_allowed = level >= Level::kL3;
  const bool realloc_allowed = level >= Level::kL4;

  ProgramSample sample;
  sample.label = b.Coin(cfg.safe_ratio) ? Label::kSafe : Label::kUnsafe;

  AccessForm form = AccessForm::kDirect;
  if (level >= Level::kL2) {
    form = static_cast<AccessForm>(b.Uniform(0, 2));
  }
  const auto [access, dest_size] = DrawAccessAndSize(b, form, sample.label);

  SampleMeta& meta = sample.meta;
  meta.level = level;
  meta.access_form = form;
  meta.access_size = access;
  meta.dest_size = dest_size;

  // Real variables. From L3 on the destination is always sized through an
  // int variable and from L4 on that variable is always reassigned; the
  // source array takes those constructs with probability 1/2.
  const int dest = b.NewEntity();
  meta.dest_entity = dest;
  const ArrayResult dest_alloc =
      b.DeclareArray(dest, dest_size, indirect_allowed, realloc_allowed);
  meta.used_indirect_alloc = dest_alloc.indirect;
  meta.used_realloc = dest_alloc.realloc;

  std::string query;
  switch (form) {
    case AccessForm::kDirect: {
      const int index = b.NewEntity();
      b.DeclareInt(index, access);
      query = Entity(dest) + " [ " + Entity(index) + " ] = " +
              b.CharLiteral() + " ;";
      break;
    }
    case AccessForm::kStrcpy:
    case AccessForm::kMemcpy: {
      const int src = b.NewEntity();
      int src_size = access;
      int length = -1;
      if (form == AccessForm::kMemcpy) {
        length = b.NewEntity();
        src_size = b.Uniform(access, cfg.int_range.hi);
      }
      const bool src_indirect = indirect_allowed && b.Coin(0.5);
      const bool src_realloc = src_indirect && realloc_allowed && b.Coin(0.5);
      const ArrayResult r =
          b.DeclareArray(src, src_size, src_indirect, src_realloc);
      meta.used_indirect_alloc |= r.indirect;
      meta.used_realloc |= r.realloc;
      if (form == AccessForm::kStrcpy) {
        query = "strcpy ( " + Entity(dest) + " , " + Entity(src) + " ) ;";
      } else {
        b.DeclareInt(length, access);
        query = "memcpy ( " + Entity(dest) + " , " + Entity(src) + " , " +
                Entity(length) + " ) ;";
      }
      break;
    }
  }

  // Dummy variables, declared and allocated like the real ones, until the
  // drawn line target or the dummy budget is reached.
  const int target = b.Uniform(cfg.min_target_lines, cfg.max_target_lines);
  int dummies = 0;
  while (static_cast<int>(b.story_line_count()) < target &&
         dummies < cfg.max_dummy_vars && b.entities_left() > 0) {
    const int kind = b.Uniform(0, 4);  // 0-1 int, 2-3 array, 4 char
    const int id = b.NewEntity();
    ++dummies;
    if (kind <= 1) {
      b.DeclareInt(id, b.RandomValue());
    } else if (kind <= 3) {
      // an indirectly sized dummy array spends a second dummy slot
      const bool indirect = indirect_allowed && dummies < cfg.max_dummy_vars &&
                            b.entities_left() > 0 && b.Coin(0.5);
      const bool realloc = indirect && realloc_allowed && b.Coin(0.5);
      if (indirect) ++dummies;
      b.DeclareArray(id, b.RandomValue(), indirect, realloc);
    } else {
      b.DeclareChar(id);
    }
  }
  meta.num_dummies = dummies;

  auto [story, position] = b.Assemble();
  meta.dest_alloc_line = position[dest_alloc.alloc_unit];
  sample.story_lines = std::move(story);
  sample.query_line = std::move(query);
  return sample;
}

std::vector<ProgramSample> GenerateCorpus(const GenConfig& cfg) {
  cfg.Validate();
  std::vector<ProgramSample> corpus;
  corpus.reserve(cfg.num_samples);
  for (std::size_t i = 0; i < cfg.num_samples; ++i) {
    std::mt19937_64 rng = SampleStream(cfg.seed, i);
    corpus.push_back(GenerateSample(cfg, rng));
  }
  return corpus;
}

CorpusStats Summarize(const std::vector<ProgramSample>& corpus) {
  CorpusStats stats;
  stats.num_samples = corpus.size();
  if (corpus.empty()) return stats;
  stats.min_lines = corpus.front().line_count();
  double total = 0.0;
  for (const ProgramSample& s : corpus) {
    const std::size_t n = s.line_count();
    stats.min_lines = std::min(stats.min_lines, n);
    stats.max_lines = std::max(stats.max_lines, n);
    total += static_cast<double>(n);
    ++stats.line_histogram[n];
    ++stats.access_form_counts[std::string(ToString(s.meta.access_form))];
    if (s.label == Label::kSafe) {
      ++stats.num_safe;
    } else {
      ++stats.num_unsafe;
    }
  }
  stats.mean_lines = total / static_cast<double>(corpus.size());
  return stats;
}

}  // namespace ovrun
