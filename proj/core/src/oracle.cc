#include <charconv>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ovrun/corpus.h"
#include "ovrun/errors.h"

namespace ovrun {
namespace {

std::vector<std::string> Split(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

bool IsIdentifier(const std::string& tok) {
  constexpr std::string_view kPrefix = "entity_";
  if (tok.size() <= kPrefix.size() || tok.compare(0, kPrefix.size(), kPrefix)) {
    return false;
  }
  for (std::size_t i = kPrefix.size(); i < tok.size(); ++i) {
    if (tok[i] < '0' || tok[i] > '9') return false;
  }
  return true;
}

std::optional<long> ParseNumber(const std::string& tok) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

bool IsCharLiteral(const std::string& tok) {
  return tok.size() == 3 && tok.front() == '\'' && tok.back() == '\'';
}

// Matches `toks` against `pattern`; "$ID", "$ARG" (identifier or number)
// and "$CHR" are placeholders, everything else must match literally.
bool Match(const std::vector<std::string>& toks,
           const std::vector<std::string_view>& pattern) {
  if (toks.size() != pattern.size()) return false;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const std::string_view p = pattern[i];
    if (p == "$ID") {
      if (!IsIdentifier(toks[i])) return false;
    } else if (p == "$ARG") {
      if (!IsIdentifier(toks[i]) && !ParseNumber(toks[i])) return false;
    } else if (p == "$NUM") {
      if (!ParseNumber(toks[i])) return false;
    } else if (p == "$CHR") {
      if (!IsCharLiteral(toks[i])) return false;
    } else if (toks[i] != p) {
      return false;
    }
  }
  return true;
}

class Interpreter {
 public:
  void Step(const std::string& line, std::size_t lineno) {
    line_ = lineno;
    text_ = &line;
    const std::vector<std::string> t = Split(line);
    if (Match(t, {"void", "fun", "(", ")", "{"})) return;
    if (Match(t, {"int", "$ID", ";"})) return Declare(t[1], Kind::kInt);
    if (Match(t, {"char", "*", "$ID", ";"})) return Declare(t[2], Kind::kArray);
    if (Match(t, {"char", "$ID", ";"})) return Declare(t[1], Kind::kChar);
    if (Match(t, {"$ID", "=", "$NUM", ";"})) {
      Var& v = Lookup(t[0], Kind::kInt);
      v.value = *ParseNumber(t[2]);
      v.set = true;
      return;
    }
    if (Match(t, {"$ID", "=", "$CHR", ";"})) {
      Lookup(t[0], Kind::kChar).set = true;
      return;
    }
    if (Match(t, {"$ID", "=", "malloc", "(", "$ARG", ")", ";"})) {
      Var& v = Lookup(t[0], Kind::kArray);
      v.value = Eval(t[4]);
      if (v.value < 1) Fail("non-positive allocation size");
      v.set = true;
      return;
    }
    if (Match(t, {"memset", "(", "$ID", ",", "$CHR", ",", "$ARG", ")", ";"})) {
      const long size = SizeOf(t[2]);
      if (Eval(t[6]) > size) Fail("memset past the end of its buffer");
      return;
    }
    Fail("unrecognized statement");
  }

  Label Query(const std::string& line) {
    line_ = 0;
    text_ = &line;
    const std::vector<std::string> t = Split(line);
    if (Match(t, {"$ID", "[", "$ARG", "]", "=", "$CHR", ";"})) {
      const long index = Eval(t[2]);
      if (index < 0) Fail("negative index");
      return index >= SizeOf(t[0]) ? Label::kUnsafe : Label::kSafe;
    }
    if (Match(t, {"strcpy", "(", "$ID", ",", "$ID", ")", ";"})) {
      return SizeOf(t[4]) > SizeOf(t[2]) ? Label::kUnsafe : Label::kSafe;
    }
    if (Match(t, {"memcpy", "(", "$ID", ",", "$ID", ",", "$ARG", ")", ";"})) {
      SizeOf(t[4]);
      return Eval(t[6]) > SizeOf(t[2]) ? Label::kUnsafe : Label::kSafe;
    }
    Fail("unrecognized query");
  }

 private:
  enum class Kind { kInt, kArray, kChar };
  struct Var {
    Kind kind;
    bool set = false;
    long value = 0;  // int value or buffer size
  };

  [[noreturn]] void Fail(const std::string& why) const {
    std::ostringstream msg;
    msg << why << " at " << (line_ ? "story line " + std::to_string(line_)
                                   : std::string("query"))
        << ": '" << *text_ << "'";
    throw UnsupportedConstructError(msg.str());
  }

  void Declare(const std::string& name, Kind kind) {
    if (!vars_.emplace(name, Var{kind}).second) Fail("redeclaration");
  }

  Var& Lookup(const std::string& name, Kind kind) {
    auto it = vars_.find(name);
    if (it == vars_.end()) Fail("use of undeclared " + name);
    if (it->second.kind != kind) Fail("type mismatch on " + name);
    return it->second;
  }

  long Eval(const std::string& arg) {
    if (auto n = ParseNumber(arg)) return *n;
    const Var& v = Lookup(arg, Kind::kInt);
    if (!v.set) Fail("read of unassigned " + arg);
    return v.value;
  }

  long SizeOf(const std::string& name) {
    const Var& v = Lookup(name, Kind::kArray);
    if (!v.set) Fail("access to unallocated buffer " + name);
    return v.value;
  }

  std::map<std::string, Var> vars_;
  std::size_t line_ = 0;
  const std::string* text_ = nullptr;
};

}  // namespace

Label OracleLabel(const std::vector<std::string>& story,
                  const std::string& query) {
  Interpreter interp;
  for (std::size_t i = 0; i < story.size(); ++i) interp.Step(story[i], i + 1);
  return interp.Query(query);
}

}  // namespace ovrun
