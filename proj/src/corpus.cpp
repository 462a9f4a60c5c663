#include "bident/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "bident/text.hpp"

namespace bident::corpus {

namespace {

using nlohmann::json;

std::string require_string(const json& rec, const char* key, std::size_t line) {
  const auto it = rec.find(key);
  if (it == rec.end()) {
    throw CorpusError(line, fmt::format("missing field \"{}\"", key));
  }
  if (!it->is_string()) {
    throw CorpusError(line, fmt::format("field \"{}\" must be a string", key));
  }
  return it->get<std::string>();
}

void require_text(std::string_view value, std::string_view what, std::size_t line) {
  if (!text::is_valid_utf8(value)) {
    throw CorpusError(line, fmt::format("{} is not valid UTF-8", what));
  }
  if (text::trim(value).empty()) {
    throw CorpusError(line, fmt::format("{} is empty", what));
  }
}

json parse_line(const std::string& line, std::size_t line_no) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    throw CorpusError(line_no, fmt::format("malformed JSON: {}", e.what()));
  }
  if (!rec.is_object()) throw CorpusError(line_no, "record must be a JSON object");
  return rec;
}

std::string location(const SystemRecord& sys, std::string_view segment_id = {}) {
  if (segment_id.empty()) return fmt::format("{}/{}", sys.language_pair, sys.name);
  return fmt::format("{}/{}/{}", sys.language_pair, sys.name, segment_id);
}

void check_text(std::vector<Issue>& issues, std::string_view value, std::string_view what,
                const std::string& where) {
  if (!text::is_valid_utf8(value)) {
    issues.push_back({Severity::kError, where, fmt::format("{} is not valid UTF-8", what)});
  } else if (text::trim(value).empty()) {
    issues.push_back({Severity::kError, where, fmt::format("{} is empty", what)});
  }
}

}  // namespace

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::kError:
      return "error";
    case Severity::kWarning:
      return "warning";
    case Severity::kInfo:
      return "info";
  }
  return "unknown";
}

CorpusError::CorpusError(std::size_t line, const std::string& message)
    : InputError(line > 0 ? fmt::format("line {}: {}", line, message) : message), line_(line) {}

bool is_valid_language_pair(std::string_view lp) {
  constexpr std::string_view kTarget = "-en";
  if (lp.size() < 2 + kTarget.size() || lp.size() > 3 + kTarget.size()) return false;
  if (!lp.ends_with(kTarget)) return false;
  const auto source = lp.substr(0, lp.size() - kTarget.size());
  return std::all_of(source.begin(), source.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

std::vector<EvaluationSet> parse_corpus(std::istream& in) {
  std::vector<EvaluationSet> sets;
  std::map<std::string, std::size_t> set_index;
  // (lang_pair, system) -> index into that set's systems
  std::map<std::pair<std::string, std::string>, std::size_t> system_index;
  std::map<std::pair<std::string, std::string>, std::unordered_set<std::string>> seen_ids;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json rec = parse_line(line, line_no);

    auto system = require_string(rec, "system", line_no);
    auto lp = require_string(rec, "lang_pair", line_no);
    auto segment_id = require_string(rec, "segment_id", line_no);
    auto candidate = require_string(rec, "candidate", line_no);

    const auto refs_it = rec.find("references");
    if (refs_it == rec.end()) throw CorpusError(line_no, "missing field \"references\"");
    if (!refs_it->is_array()) throw CorpusError(line_no, "field \"references\" must be an array");
    if (refs_it->empty()) throw CorpusError(line_no, "field \"references\" is empty");
    std::vector<std::string> references;
    for (const auto& r : *refs_it) {
      if (!r.is_string()) throw CorpusError(line_no, "references must be strings");
      references.push_back(r.get<std::string>());
    }

    if (text::trim(system).empty()) throw CorpusError(line_no, "system name is empty");
    if (!is_valid_language_pair(lp)) {
      throw CorpusError(line_no, fmt::format("language pair \"{}\" is not of the form xx-en", lp));
    }
    if (text::trim(segment_id).empty()) throw CorpusError(line_no, "segment_id is empty");
    require_text(candidate, "candidate", line_no);
    for (const auto& r : references) require_text(r, "reference", line_no);

    const auto key = std::make_pair(lp, system);
    if (!seen_ids[key].insert(segment_id).second) {
      throw CorpusError(line_no, fmt::format("duplicate segment_id \"{}\" for system \"{}\"",
                                             segment_id, system));
    }

    auto [set_it, new_set] = set_index.try_emplace(lp, sets.size());
    if (new_set) sets.push_back(EvaluationSet{lp, {}});
    auto& set = sets[set_it->second];

    auto [sys_it, new_sys] = system_index.try_emplace(key, set.systems.size());
    if (new_sys) set.systems.push_back(SystemRecord{system, lp, {}, std::nullopt});
    set.systems[sys_it->second].segments.push_back(
        Segment{std::move(segment_id), std::move(candidate), std::move(references)});
  }
  if (in.bad()) throw CorpusError(0, "read failure");
  if (sets.empty()) throw CorpusError(0, "corpus contains no records");

  for (const auto& set : sets) {
    for (const auto& issue : validate(set)) {
      if (issue.severity == Severity::kError) {
        throw CorpusError(0, fmt::format("{}: {}", issue.location, issue.message));
      }
    }
  }
  return sets;
}

EvaluationSet parse_dataset(std::istream& in) {
  auto sets = parse_corpus(in);
  if (sets.size() != 1) {
    throw CorpusError(0, fmt::format("expected one language pair, found {}", sets.size()));
  }
  return std::move(sets.front());
}

std::vector<Issue> validate(const EvaluationSet& set) {
  std::vector<Issue> issues;
  if (!is_valid_language_pair(set.language_pair)) {
    issues.push_back({Severity::kError, set.language_pair,
                      fmt::format("language pair \"{}\" is not of the form xx-en",
                                  set.language_pair)});
  }
  if (set.systems.empty()) {
    issues.push_back({Severity::kError, set.language_pair, "evaluation set has no systems"});
    return issues;
  }

  std::unordered_set<std::string> names;
  for (const auto& sys : set.systems) {
    const auto where = location(sys);
    if (text::trim(sys.name).empty()) {
      issues.push_back({Severity::kError, where, "system name is empty"});
    }
    if (!names.insert(sys.name).second) {
      issues.push_back({Severity::kError, where, "duplicate system name"});
    }
    if (sys.language_pair != set.language_pair) {
      issues.push_back({Severity::kError, where,
                        fmt::format("language pair \"{}\" differs from set \"{}\"",
                                    sys.language_pair, set.language_pair)});
    }
    if (sys.segments.empty()) issues.push_back({Severity::kError, where, "system has no segments"});
    if (sys.human_score && !std::isfinite(*sys.human_score)) {
      issues.push_back({Severity::kError, where, "human score is not finite"});
    }

    std::unordered_set<std::string> ids;
    for (const auto& seg : sys.segments) {
      const auto seg_where = location(sys, seg.id);
      if (text::trim(seg.id).empty()) {
        issues.push_back({Severity::kError, where, "segment_id is empty"});
      }
      if (!ids.insert(seg.id).second) {
        issues.push_back({Severity::kError, seg_where, "duplicate segment_id"});
      }
      check_text(issues, seg.candidate, "candidate", seg_where);
      if (seg.references.empty()) {
        issues.push_back({Severity::kError, seg_where, "segment has no references"});
      }
      for (const auto& r : seg.references) check_text(issues, r, "reference", seg_where);
    }
  }

  // Segment id sets must agree with the first system's.
  const auto& first = set.systems.front();
  std::set<std::string> expected;
  for (const auto& seg : first.segments) expected.insert(seg.id);
  for (std::size_t i = 1; i < set.systems.size(); ++i) {
    const auto& sys = set.systems[i];
    std::set<std::string> actual;
    for (const auto& seg : sys.segments) actual.insert(seg.id);
    for (const auto& id : expected) {
      if (!actual.contains(id)) {
        issues.push_back({Severity::kError, location(sys),
                          fmt::format("missing segment \"{}\" present in system \"{}\"", id,
                                      first.name)});
      }
    }
    for (const auto& id : actual) {
      if (!expected.contains(id)) {
        issues.push_back({Severity::kError, location(sys),
                          fmt::format("extra segment \"{}\" absent from system \"{}\"", id,
                                      first.name)});
      }
    }
  }

  // Partial human scoring is legal; correlation enforces the minimum count.
  std::vector<std::string> unscored;
  for (const auto& sys : set.systems) {
    if (!sys.human_score) unscored.push_back(sys.name);
  }
  if (!unscored.empty() && unscored.size() < set.systems.size()) {
    issues.push_back({Severity::kInfo, set.language_pair,
                      fmt::format("systems without human score: {}", fmt::join(unscored, ", "))});
  }
  return issues;
}

bool has_errors(std::span<const Issue> issues) {
  return std::any_of(issues.begin(), issues.end(),
                     [](const Issue& i) { return i.severity == Severity::kError; });
}

std::string to_jsonl(const EvaluationSet& set) {
  std::string out;
  for (const auto& sys : set.systems) {
    for (const auto& seg : sys.segments) {
      nlohmann::ordered_json rec;
      rec["system"] = sys.name;
      rec["lang_pair"] = sys.language_pair;
      rec["segment_id"] = seg.id;
      rec["candidate"] = seg.candidate;
      rec["references"] = seg.references;
      out += rec.dump();
      out += '\n';
    }
  }
  return out;
}

std::string convert_plain_text(std::istream& candidates, std::istream& references,
                               std::string_view system_name, std::string_view language_pair) {
  if (text::trim(system_name).empty()) throw CorpusError(0, "system name is empty");
  if (!is_valid_language_pair(language_pair)) {
    throw CorpusError(0, fmt::format("language pair \"{}\" is not of the form xx-en",
                                     language_pair));
  }
  auto read_lines = [](std::istream& in, std::string_view what) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
      const auto line_no = lines.size() + 1;
      require_text(line, fmt::format("{} line", what), line_no);
      lines.push_back(std::move(line));
    }
    return lines;
  };
  const auto cands = read_lines(candidates, "candidate");
  const auto refs = read_lines(references, "reference");
  if (cands.size() != refs.size()) {
    throw CorpusError(0, fmt::format("line count mismatch: {} candidates vs {} references",
                                     cands.size(), refs.size()));
  }
  if (cands.empty()) throw CorpusError(0, "input files are empty");

  std::string out;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    nlohmann::ordered_json rec;
    rec["system"] = system_name;
    rec["lang_pair"] = language_pair;
    rec["segment_id"] = fmt::format("seg-{}", i + 1);
    rec["candidate"] = cands[i];
    rec["references"] = std::vector<std::string>{refs[i]};
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::vector<HumanScore> parse_human_scores(std::istream& in) {
  std::vector<HumanScore> scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json rec = parse_line(line, line_no);
    HumanScore s;
    s.system_name = require_string(rec, "system", line_no);
    s.language_pair = require_string(rec, "lang_pair", line_no);
    const auto it = rec.find("human_score");
    if (it == rec.end()) throw CorpusError(line_no, "missing field \"human_score\"");
    if (!it->is_number()) throw CorpusError(line_no, "field \"human_score\" must be a number");
    s.score = it->get<double>();
    if (!std::isfinite(s.score)) throw CorpusError(line_no, "human_score is not finite");
    scores.push_back(std::move(s));
  }
  return scores;
}

void attach_human_scores(std::span<EvaluationSet> sets, std::span<const HumanScore> scores) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& hs : scores) {
    if (!seen.insert({hs.language_pair, hs.system_name}).second) {
      throw CorpusError(0, fmt::format("duplicate human score for {}/{}", hs.language_pair,
                                       hs.system_name));
    }
    auto set_it = std::find_if(sets.begin(), sets.end(), [&](const EvaluationSet& s) {
      return s.language_pair == hs.language_pair;
    });
    if (set_it == sets.end()) {
      throw CorpusError(0, fmt::format("human score for unknown language pair \"{}\"",
                                       hs.language_pair));
    }
    auto sys_it = std::find_if(set_it->systems.begin(), set_it->systems.end(),
                               [&](const SystemRecord& r) { return r.name == hs.system_name; });
    if (sys_it == set_it->systems.end()) {
      throw CorpusError(0, fmt::format("human score for unknown system {}/{}", hs.language_pair,
                                       hs.system_name));
    }
    sys_it->human_score = hs.score;
  }
}

}  // namespace bident::corpus
