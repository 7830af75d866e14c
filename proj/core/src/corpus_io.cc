#include "ovrun/corpus_io.h"

#include <fstream>

#include "json.hpp"
#include "ovrun/errors.h"

namespace ovrun {

using nlohmann::ordered_json;

std::string ToJsonLine(const ProgramSample& s) {
  ordered_json j;
  j["story"] = s.story_lines;
  j["query"] = s.query_line;
  j["label"] = ToInt(s.label);
  ordered_json m;
  m["level"] = ToInt(s.meta.level);
  m["dest_size"] = s.meta.dest_size;
  m["access_size"] = s.meta.access_size;
  m["dest_entity"] = s.meta.dest_entity;
  m["access_form"] = ToString(s.meta.access_form);
  m["used_indirect_alloc"] = s.meta.used_indirect_alloc;
  m["used_realloc"] = s.meta.used_realloc;
  m["dest_alloc_line"] = s.meta.dest_alloc_line;
  m["num_dummies"] = s.meta.num_dummies;
  j["meta"] = std::move(m);
  return j.dump();
}

ProgramSample FromJsonLine(const std::string& line) {
  ProgramSample s;
  try {
    const auto j = ordered_json::parse(line);
    s.story_lines = j.at("story").get<std::vector<std::string>>();
    s.query_line = j.at("query").get<std::string>();
    const int label = j.at("label").get<int>();
    if (label != 0 && label != 1) throw DataError("label must be 0 or 1");
    s.label = static_cast<Label>(label);
    if (j.contains("meta")) {
      const auto& m = j.at("meta");
      s.meta.level = LevelFromInt(m.value("level", 1));
      s.meta.dest_size = m.value("dest_size", 0);
      s.meta.access_size = m.value("access_size", 0);
      s.meta.dest_entity = m.value("dest_entity", 0);
      s.meta.access_form =
          AccessFormFromString(m.value("access_form", std::string("direct")));
      s.meta.used_indirect_alloc = m.value("used_indirect_alloc", false);
      s.meta.used_realloc = m.value("used_realloc", false);
      s.meta.dest_alloc_line = m.value("dest_alloc_line", -1);
      s.meta.num_dummies = m.value("num_dummies", 0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed corpus record: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed corpus record: ") + e.what());
  }
  return s;
}

void WriteCorpus(const std::filesystem::path& path,
                 const std::vector<ProgramSample>& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const ProgramSample& s : corpus) out << ToJsonLine(s) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<ProgramSample> ReadCorpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  std::vector<ProgramSample> corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      corpus.push_back(FromJsonLine(line));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " +
                      e.what());
    }
  }
  return corpus;
}

std::string StatsToJson(const CorpusStats& st) {
  ordered_json j;
  j["num_samples"] = st.num_samples;
  j["num_safe"] = st.num_safe;
  j["num_unsafe"] = st.num_unsafe;
  j["unsafe_fraction"] = st.unsafe_fraction();
  j["min_lines"] = st.min_lines;
  j["max_lines"] = st.max_lines;
  j["mean_lines"] = st.mean_lines;
  ordered_json hist = ordered_json::object();
  for (const auto& [n, c] : st.line_histogram) hist[std::to_string(n)] = c;
  j["line_histogram"] = std::move(hist);
  ordered_json forms = ordered_json::object();
  for (const auto& [f, c] : st.access_form_counts) forms[f] = c;
  j["access_forms"] = std::move(forms);
  return j.dump(2);
}

}  // namespace ovrun
