#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bident/error.hpp"

namespace bident::corpus {

struct Segment {
  std::string id;
  std::string candidate;
  std::vector<std::string> references;

  bool operator==(const Segment&) const = default;
};

struct SystemRecord {
  std::string name;
  std::string language_pair;
  std::vector<Segment> segments;
  // System-level human judgment (z-score scale), when available.
  std::optional<double> human_score;

  bool operator==(const SystemRecord&) const = default;
};

// All systems translating one language pair into English.
struct EvaluationSet {
  std::string language_pair;
  std::vector<SystemRecord> systems;

  bool operator==(const EvaluationSet&) const = default;
};

enum class Severity { kError, kWarning, kInfo };

std::string_view to_string(Severity s);

struct Issue {
  Severity severity;
  std::string location;
  std::string message;
};

// Raised for malformed or invalid corpus input. `line()` is 1-based, or 0
// when the problem is not tied to a single input line.
class CorpusError : public InputError {
 public:
  CorpusError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// True for "xx-en" / "xxx-en" with a lowercase ASCII source code.
bool is_valid_language_pair(std::string_view lp);

// Parses canonical JSONL. Records are grouped by lang_pair and then by
// system, both in order of first appearance; segment order is preserved.
// Every resulting set is validated and any error-severity issue is raised.
std::vector<EvaluationSet> parse_corpus(std::istream& in);

// Like parse_corpus but requires exactly one language pair.
EvaluationSet parse_dataset(std::istream& in);

// Empty iff all invariants hold (info issues aside). Never throws.
std::vector<Issue> validate(const EvaluationSet& set);

bool has_errors(std::span<const Issue> issues);

// Serializes back to canonical JSONL, one record per segment per system.
std::string to_jsonl(const EvaluationSet& set);

// Pairs line i of each stream into record "seg-<i>". Throws CorpusError on a
// line-count mismatch, an empty line, or invalid UTF-8.
std::string convert_plain_text(std::istream& candidates, std::istream& references,
                               std::string_view system_name, std::string_view language_pair);

struct HumanScore {
  std::string system_name;
  std::string language_pair;
  double score = 0.0;
};

// Sidecar records {"system":..,"lang_pair":..,"human_score":..}.
std::vector<HumanScore> parse_human_scores(std::istream& in);

// Sets SystemRecord::human_score from sidecar entries. Entries naming an
// unknown system or language pair are an error; duplicates are an error.
void attach_human_scores(std::span<EvaluationSet> sets, std::span<const HumanScore> scores);

}  // namespace bident::corpus
