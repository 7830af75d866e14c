#ifndef OVRUN_CORPUS_IO_H_
#define OVRUN_CORPUS_IO_H_

#include <filesystem>
#include <string>
#include <vector>

#include "ovrun/corpus.h"

namespace ovrun {

// One JSON object per line:
//   {"story": [...], "query": "...", "label": 0|1, "meta": {...}}
// label 0 = unsafe, 1 = safe. Keys are emitted in a fixed order so that the
// same corpus always serializes to the same bytes.
std::string ToJsonLine(const ProgramSample& sample);
ProgramSample FromJsonLine(const std::string& line);

void WriteCorpus(const std::filesystem::path& path,
                 const std::vector<ProgramSample>& corpus);
std::vector<ProgramSample> ReadCorpus(const std::filesystem::path& path);

std::string StatsToJson(const CorpusStats& stats);

}  // namespace ovrun

#endif  // OVRUN_CORPUS_IO_H_
