#ifndef OVRUN_ENCODING_H_
#define OVRUN_ENCODING_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ovrun/corpus.h"
#include "ovrun/matrix.h"

namespace ovrun {

using TokenId = std::uint32_t;

// Whitespace split. Integers, identifiers, keywords and punctuation all come
// out as plain word tokens; nothing is parsed as a number.
std::vector<std::string> Tokenize(std::string_view line);
std::string Detokenize(const std::vector<std::string>& tokens);

// Bijective token <-> index map. Index 0 is padding and index 1 stands for
// tokens never seen while building; the rest follow first occurrence.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  static Vocabulary FromLines(std::span<const std::string> lines);
  // Story lines then query, sample by sample.
  static Vocabulary FromCorpus(const std::vector<ProgramSample>& corpus);
  // Inverse of tokens(); throws DataError unless the list starts with the
  // reserved entries and has no duplicates.
  static Vocabulary FromTokens(std::vector<std::string> tokens);

  // Ordered token list, one per line.
  void Save(const std::filesystem::path& path) const;
  static Vocabulary Load(const std::filesystem::path& path);

  TokenId Add(std::string_view token);
  TokenId Id(std::string_view token) const;
  bool Contains(std::string_view token) const;
  const std::string& Token(TokenId id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Position encoding for a line of J words and embedding size d:
//   entry (j, k) = (1 - j/J) - (k/d) (1 - 2j/J),  j in 1..J, k in 1..d
// stored at row j-1, column k-1.
Matrix PositionWeights(std::size_t words, std::size_t dim);

// PositionWeights(t, dim) for every line length t in 1..max_words.
class PositionTable {
 public:
  PositionTable() = default;
  PositionTable(std::size_t max_words, std::size_t dim);

  const Matrix& ForLength(std::size_t words) const;
  std::size_t max_words() const { return tables_.size(); }
  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_ = 0;
  std::vector<Matrix> tables_;
};

// Position-weighted bag of embeddings: sum_j l_j * table[ids[j]] with the
// line's own length used as J. Throws EncodingError if ids.size() > width.
Vector EncodeLine(std::span<const TokenId> ids, const Matrix& table,
                  std::size_t width);
Vector EncodeLine(std::span<const TokenId> ids, const Matrix& table,
                  const PositionTable& positions);

// Token indices for one sample, padded to capacity N lines of width J.
struct EncodedSample {
  std::size_t capacity = 0;
  std::size_t width = 0;
  std::vector<TokenId> story_ids;          // capacity * width, row-major
  std::vector<std::size_t> story_lengths;  // words per slot
  std::vector<TokenId> query_ids;          // width
  std::size_t query_length = 0;
  int label = 0;
  std::size_t num_lines = 0;  // story lines actually present

  std::span<const TokenId> line(std::size_t i) const {
    return {story_ids.data() + i * width, story_lengths[i]};
  }
  std::span<const TokenId> query() const {
    return {query_ids.data(), query_length};
  }
};

// Largest token count over every story line and query of the corpus.
std::size_t MaxLineWidth(const std::vector<ProgramSample>& corpus);

// Throws CapacityError if the story has more than `capacity` lines and
// EncodingError if any line is wider than `width`.
EncodedSample Encode(const ProgramSample& sample, const Vocabulary& vocab,
                     std::size_t capacity, std::size_t width);
std::vector<EncodedSample> EncodeAll(const std::vector<ProgramSample>& corpus,
                                     const Vocabulary& vocab,
                                     std::size_t capacity, std::size_t width);

// Memory value block, memory address block and initial query embedding u0.
struct EncodedMemory {
  Matrix value;    // N x d
  Matrix address;  // N x d
  Vector query;    // d
};

EncodedMemory EncodeMemory(const EncodedSample& sample,
                           const Matrix& value_table,
                           const Matrix& address_table,
                           const PositionTable& positions);
EncodedMemory EncodeMemory(const EncodedSample& sample,
                           const Matrix& value_table,
                           const Matrix& address_table);

}  // namespace ovrun

#endif  // OVRUN_ENCODING_H_
