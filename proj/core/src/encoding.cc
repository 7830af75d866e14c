#include "ovrun/encoding.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "ovrun/errors.h"

namespace ovrun {

std::vector<std::string> Tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    const std::size_t start = i;
    while (i < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start));
  }
  return out;
}

std::string Detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

Vocabulary::Vocabulary() {
  Add(kPadToken);
  Add(kUnkToken);
}

TokenId Vocabulary::Add(std::string_view token) {
  auto [it, inserted] =
      index_.emplace(std::string(token), static_cast<TokenId>(tokens_.size()));
  if (inserted) tokens_.emplace_back(token);
  return it->second;
}

TokenId Vocabulary::Id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::Contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

Vocabulary Vocabulary::FromLines(std::span<const std::string> lines) {
  Vocabulary v;
  for (const std::string& line : lines) {
    for (const std::string& tok : Tokenize(line)) v.Add(tok);
  }
  return v;
}

Vocabulary Vocabulary::FromCorpus(const std::vector<ProgramSample>& corpus) {
  Vocabulary v;
  for (const ProgramSample& s : corpus) {
    for (const std::string& line : s.story_lines) {
      for (const std::string& tok : Tokenize(line)) v.Add(tok);
    }
    for (const std::string& tok : Tokenize(s.query_line)) v.Add(tok);
  }
  return v;
}

Vocabulary Vocabulary::FromTokens(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[0] != kPadToken || tokens[1] != kUnkToken) {
    throw DataError("vocabulary must start with " + std::string(kPadToken) +
                    " and " + std::string(kUnkToken));
  }
  Vocabulary v;
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    if (tokens[i].empty() || v.Contains(tokens[i])) {
      throw DataError("vocabulary entry " + std::to_string(i) +
                      " is empty or duplicated");
    }
    v.Add(tokens[i]);
  }
  return v;
}

void Vocabulary::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const std::string& t : tokens_) out << t << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

Vocabulary Vocabulary::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file " + path.string());
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) tokens.push_back(line);
  return FromTokens(std::move(tokens));
}

Matrix PositionWeights(std::size_t words, std::size_t dim) {
  Matrix l(words, dim);
  const double J = static_cast<double>(words);
  const double d = static_cast<double>(dim);
  for (std::size_t j = 1; j <= words; ++j) {
    for (std::size_t k = 1; k <= dim; ++k) {
      l(j - 1, k - 1) =
          (1.0 - j / J) - (static_cast<double>(k) / d) * (1.0 - 2.0 * j / J);
    }
  }
  return l;
}

PositionTable::PositionTable(std::size_t max_words, std::size_t dim)
    : dim_(dim) {
  tables_.reserve(max_words);
  for (std::size_t t = 1; t <= max_words; ++t) {
    tables_.push_back(PositionWeights(t, dim));
  }
}

const Matrix& PositionTable::ForLength(std::size_t words) const {
  if (words == 0 || words > tables_.size()) {
    throw EncodingError("no position weights for a line of " +
                        std::to_string(words) + " words");
  }
  return tables_[words - 1];
}

Vector EncodeLine(std::span<const TokenId> ids, const Matrix& table,
                  const PositionTable& positions) {
  const std::size_t d = table.cols();
  Vector m(d, 0.0);
  if (ids.empty()) return m;
  if (ids.size() > positions.max_words()) {
    throw EncodingError("line of " + std::to_string(ids.size()) +
                        " tokens exceeds width " +
                        std::to_string(positions.max_words()));
  }
  const Matrix& l = positions.ForLength(ids.size());
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (ids[j] >= table.rows()) {
      throw ContractError("token id " + std::to_string(ids[j]) +
                          " outside embedding table");
    }
    const auto e = table.row(ids[j]);
    const auto w = l.row(j);
    for (std::size_t k = 0; k < d; ++k) m[k] += w[k] * e[k];
  }
  return m;
}

Vector EncodeLine(std::span<const TokenId> ids, const Matrix& table,
                  std::size_t width) {
  if (ids.size() > width) {
    throw EncodingError("line of " + std::to_string(ids.size()) +
                        " tokens exceeds width " + std::to_string(width));
  }
  return EncodeLine(ids, table, PositionTable(ids.size(), table.cols()));
}

std::size_t MaxLineWidth(const std::vector<ProgramSample>& corpus) {
  std::size_t width = 0;
  for (const ProgramSample& s : corpus) {
    for (const std::string& line : s.story_lines) {
      width = std::max(width, Tokenize(line).size());
    }
    width = std::max(width, Tokenize(s.query_line).size());
  }
  return width;
}

EncodedSample Encode(const ProgramSample& sample, const Vocabulary& vocab,
                     std::size_t capacity, std::size_t width) {
  if (sample.story_lines.size() > capacity) {
    throw CapacityError("story of " +
                        std::to_string(sample.story_lines.size()) +
                        " lines exceeds memory capacity " +
                        std::to_string(capacity));
  }
  EncodedSample enc;
  enc.capacity = capacity;
  enc.width = width;
  enc.story_ids.assign(capacity * width, Vocabulary::kPad);
  enc.story_lengths.assign(capacity, 0);
  enc.query_ids.assign(width, Vocabulary::kPad);
  enc.label = ToInt(sample.label);
  enc.num_lines = sample.story_lines.size();

  auto fill = [&](const std::string& line, TokenId* dst) {
    const auto toks = Tokenize(line);
    if (toks.size() > width) {
      throw EncodingError("line '" + line + "' has " +
                          std::to_string(toks.size()) +
                          " tokens, width is " + std::to_string(width));
    }
    for (std::size_t j = 0; j < toks.size(); ++j) dst[j] = vocab.Id(toks[j]);
    return toks.size();
  };
  for (std::size_t i = 0; i < sample.story_lines.size(); ++i) {
    enc.story_lengths[i] =
        fill(sample.story_lines[i], enc.story_ids.data() + i * width);
  }
  enc.query_length = fill(sample.query_line, enc.query_ids.data());
  return enc;
}

std::vector<EncodedSample> EncodeAll(const std::vector<ProgramSample>& corpus,
                                     const Vocabulary& vocab,
                                     std::size_t capacity, std::size_t width) {
  std::vector<EncodedSample> out;
  out.reserve(corpus.size());
  for (const ProgramSample& s : corpus) {
    out.push_back(Encode(s, vocab, capacity, width));
  }
  return out;
}

EncodedMemory EncodeMemory(const EncodedSample& sample,
                           const Matrix& value_table,
                           const Matrix& address_table,
                           const PositionTable& positions) {
  const std::size_t d = value_table.cols();
  EncodedMemory mem{Matrix(sample.capacity, d), Matrix(sample.capacity, d),
                    Vector(d, 0.0)};
  for (std::size_t i = 0; i < sample.capacity; ++i) {
    if (sample.story_lengths[i] == 0) continue;
    const Vector v = EncodeLine(sample.line(i), value_table, positions);
    const Vector a = EncodeLine(sample.line(i), address_table, positions);
    std::copy(v.begin(), v.end(), mem.value.row(i).begin());
    std::copy(a.begin(), a.end(), mem.address.row(i).begin());
  }
  mem.query = EncodeLine(sample.query(), address_table, positions);
  return mem;
}

EncodedMemory EncodeMemory(const EncodedSample& sample,
                           const Matrix& value_table,
                           const Matrix& address_table) {
  return EncodeMemory(sample, value_table, address_table,
                      PositionTable(sample.width, value_table.cols()));
}

}  // namespace ovrun
