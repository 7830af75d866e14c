#include "ovrun/introspection.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "ovrun/errors.h"

namespace ovrun {

std::vector<std::size_t> TraceReport::ArgmaxLines() const {
  std::vector<std::size_t> out;
  for (const Vector& p : trace.attention) {
    const std::size_t n = std::min(p.size(), story.size());
    if (n == 0) {
      out.push_back(0);
      continue;
    }
    out.push_back(static_cast<std::size_t>(
        std::max_element(p.begin(), p.begin() + n) - p.begin()));
  }
  return out;
}

TraceReport Trace(const ProgramSample& sample, const ModelParams& params,
                  const Vocabulary& vocab) {
  std::size_t width = Tokenize(sample.query_line).size();
  for (const std::string& line : sample.story_lines) {
    width = std::max(width, Tokenize(line).size());
  }
  const EncodedSample enc = Encode(sample, vocab, params.capacity, width);
  TraceReport r;
  r.story = sample.story_lines;
  r.query = sample.query_line;
  r.trace = Forward(enc, params);
  r.label = ToInt(sample.label);
  r.prediction = r.trace.prediction();
  r.confidence = PredictionConfidence(r.trace.score);
  return r;
}

std::string FormatTrace(const TraceReport& r) {
  std::ostringstream out;
  char buf[64];
  const std::size_t hops = r.trace.attention.size();
  const auto argmax = r.ArgmaxLines();
  out << "line ";
  for (std::size_t k = 0; k < hops; ++k) {
    std::snprintf(buf, sizeof(buf), "  hop%-2zu", k + 1);
    out << buf;
  }
  out << "  source\n";
  for (std::size_t i = 0; i < r.story.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%4zu ", i + 1);
    out << buf;
    for (std::size_t k = 0; k < hops; ++k) {
      std::snprintf(buf, sizeof(buf), " %5.3f%c", r.trace.attention[k][i],
                    argmax[k] == i ? '*' : ' ');
      out << buf;
    }
    out << "  " << r.story[i] << "\n";
  }
  const std::size_t slots = hops ? r.trace.attention[0].size() : 0;
  if (slots > r.story.size()) {
    out << "     ";
    for (std::size_t k = 0; k < hops; ++k) {
      double mass = 0.0;
      for (std::size_t i = r.story.size(); i < slots; ++i) {
        mass += r.trace.attention[k][i];
      }
      std::snprintf(buf, sizeof(buf), " %5.3f ", mass);
      out << buf;
    }
    out << "  <empty> x" << (slots - r.story.size()) << "\n";
  }
  out << "query: " << r.query << "\n";
  std::snprintf(buf, sizeof(buf), "%.4f", r.trace.score);
  out << "score: " << buf << "  prediction: "
      << (r.prediction == 1 ? "safe" : "unsafe")
      << "  label: " << (r.label == 1 ? "safe" : "unsafe");
  std::snprintf(buf, sizeof(buf), "%.4f", r.confidence);
  out << "  confidence (|score-0.5|*2): " << buf << "\n";
  return out.str();
}

std::string TraceToJson(const TraceReport& r) {
  nlohmann::ordered_json j;
  j["story"] = r.story;
  j["query"] = r.query;
  j["attention"] = r.trace.attention;
  j["argmax_lines"] = r.ArgmaxLines();
  j["score"] = r.trace.score;
  j["prediction"] = r.prediction;
  j["label"] = r.label;
  j["confidence"] = r.confidence;
  j["confidence_definition"] = "|score - 0.5| * 2";
  return j.dump(2);
}

std::string_view ToString(EmbeddingTable table) {
  return table == EmbeddingTable::kValue ? "value" : "address";
}

EmbeddingTable EmbeddingTableFromString(std::string_view name) {
  if (name == "value" || name == "val") return EmbeddingTable::kValue;
  if (name == "address" || name == "addr") return EmbeddingTable::kAddress;
  throw ConfigError("embedding table must be 'value' or 'address', got '" +
                    std::string(name) + "'");
}

std::optional<long> NumericValue(std::string_view token) {
  if (token.empty()) return std::nullopt;
  long v = 0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() ||
      token.front() == '-' || token.front() == '+') {
    return std::nullopt;
  }
  return v;
}

EmbeddingAtlas EmbeddingAtlas::Build(const Vocabulary& vocab,
                                     const ModelParams& params,
                                     EmbeddingTable table) {
  if (vocab.size() != params.vocab_size()) {
    throw ContractError("vocabulary size " + std::to_string(vocab.size()) +
                        " does not match checkpoint V=" +
                        std::to_string(params.vocab_size()));
  }
  const Matrix& src = table == EmbeddingTable::kValue
                          ? params.value_embedding
                          : params.address_embedding;
  EmbeddingAtlas atlas;
  atlas.table = table;
  atlas.vectors = Matrix(vocab.size() - 1, params.dim());
  std::vector<std::pair<long, std::size_t>> numbers;
  for (TokenId id = 1; id < vocab.size(); ++id) {
    const std::size_t row = id - 1;
    atlas.tokens.push_back(vocab.Token(id));
    std::ranges::copy(src.row(id), atlas.vectors.row(row).begin());
    if (auto v = NumericValue(vocab.Token(id))) numbers.emplace_back(*v, row);
  }
  std::ranges::sort(numbers);
  for (const auto& [value, row] : numbers) {
    atlas.numeric_values.push_back(value);
    atlas.numeric_subset.push_back(row);
  }
  return atlas;
}

NumberGeometry ComputeNumberGeometry(const EmbeddingAtlas& atlas) {
  const std::size_t n = atlas.numeric_subset.size();
  if (n < 2) throw ContractError("need at least two numeric tokens");
  NumberGeometry g;
  g.values = atlas.numeric_values;
  g.cosine = Matrix(n, n);
  g.l2 = Matrix(n, n);
  std::vector<double> norms(n);
  for (std::size_t a = 0; a < n; ++a) {
    const auto v = atlas.vectors.row(atlas.numeric_subset[a]);
    norms[a] = std::sqrt(dot(v, v));
  }
  for (std::size_t a = 0; a < n; ++a) {
    const auto va = atlas.vectors.row(atlas.numeric_subset[a]);
    for (std::size_t b = a; b < n; ++b) {
      const auto vb = atlas.vectors.row(atlas.numeric_subset[b]);
      double sq = 0.0;
      for (std::size_t k = 0; k < va.size(); ++k) {
        sq += (va[k] - vb[k]) * (va[k] - vb[k]);
      }
      g.l2(a, b) = g.l2(b, a) = std::sqrt(sq);
      double cos = std::nan("");
      if (norms[a] > 0.0 && norms[b] > 0.0) {
        cos = a == b ? 1.0
                     : std::clamp(dot(va, vb) / (norms[a] * norms[b]), -1.0,
                                  1.0);
      } else {
        g.undefined_cosine.emplace_back(a, b);
      }
      g.cosine(a, b) = g.cosine(b, a) = cos;
    }
  }
  return g;
}

namespace {

std::vector<double> AverageRanks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::ranges::sort(idx, [&](std::size_t a, std::size_t b) {
    return x[a] < x[b];
  });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && x[idx[j]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j - 1) + 1.0;
    for (std::size_t t = i; t < j; ++t) ranks[idx[t]] = r;
    i = j;
  }
  return ranks;
}

}  // namespace

double Spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ContractError("Spearman needs two equal-length series of >= 2");
  }
  const auto rx = AverageRanks(x);
  const auto ry = AverageRanks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double DistanceRankCorrelation(const NumberGeometry& g) {
  std::vector<double> gap, dist;
  for (std::size_t a = 0; a < g.values.size(); ++a) {
    for (std::size_t b = a + 1; b < g.values.size(); ++b) {
      gap.push_back(std::abs(static_cast<double>(g.values[a] - g.values[b])));
      dist.push_back(g.l2(a, b));
    }
  }
  return Spearman(gap, dist);
}

void WriteMatrixCsv(const std::filesystem::path& path,
                    const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels,
                    const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "token";
  for (const std::string& c : col_labels) out << ',' << c;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << (r < row_labels.size() ? row_labels[r] : std::to_string(r));
    for (std::size_t c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), ",%.9g", m(r, c));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

void WriteHeatmapPpm(const std::filesystem::path& path, const Matrix& m,
                     double lo, double hi, std::size_t cell) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  const std::size_t w = m.cols() * cell;
  const std::size_t h = m.rows() * cell;
  out << "P6\n" << w << ' ' << h << "\n255\n";
  std::vector<unsigned char> row(w * 3);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      unsigned char rgb[3] = {0, 0, 0};
      const double v = m(r, c);
      if (std::isfinite(v)) {
        const double t =
            hi > lo ? std::clamp((v - lo) / (hi - lo), 0.0, 1.0) : 0.5;
        // blue -> white -> red
        const double red = t < 0.5 ? 2.0 * t : 1.0;
        const double blue = t < 0.5 ? 1.0 : 2.0 * (1.0 - t);
        const double green = t < 0.5 ? 2.0 * t : 2.0 * (1.0 - t);
        rgb[0] = static_cast<unsigned char>(std::lround(255 * red));
        rgb[1] = static_cast<unsigned char>(std::lround(255 * green));
        rgb[2] = static_cast<unsigned char>(std::lround(255 * blue));
      }
      for (std::size_t x = 0; x < cell; ++x) {
        std::copy(rgb, rgb + 3, row.begin() + (c * cell + x) * 3);
      }
    }
    for (std::size_t y = 0; y < cell; ++y) {
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size()));
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

void ExportEmbeddings(const EmbeddingAtlas& atlas,
                      const std::filesystem::path& path, bool numeric_only) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  const std::size_t d = atlas.vectors.cols();
  out << "token,value";
  for (std::size_t k = 0; k < d; ++k) out << ",c" << k;
  out << '\n';
  char buf[32];
  auto emit = [&](std::size_t row) {
    const std::string& tok = atlas.tokens[row];
    // Quote tokens that would break the CSV (',' is itself a token).
    if (tok.find_first_of(",\"") != std::string::npos) {
      out << '"';
      for (char ch : tok) out << (ch == '"' ? "\"\"" : std::string(1, ch));
      out << '"';
    } else {
      out << tok;
    }
    out << ',';
    if (auto v = NumericValue(tok)) out << *v;
    for (double x : atlas.vectors.row(row)) {
      std::snprintf(buf, sizeof(buf), ",%.9g", x);
      out << buf;
    }
    out << '\n';
  };
  if (numeric_only) {
    for (std::size_t row : atlas.numeric_subset) emit(row);
  } else {
    for (std::size_t row = 0; row < atlas.tokens.size(); ++row) emit(row);
  }
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace ovrun
