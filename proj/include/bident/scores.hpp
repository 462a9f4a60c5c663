#pragma once

#include <cstddef>
#include <istream>
#include <span>
#include <string>
#include <vector>

namespace bident {

// One system's aggregate value under one metric.
struct SystemScore {
  std::string system_name;
  std::string language_pair;
  std::string metric;
  double value = 0.0;
  std::size_t segment_count = 0;

  bool operator==(const SystemScore&) const = default;
};

// Arithmetic mean of `values`; throws InputError when empty.
SystemScore mean_system_score(std::string system_name, std::string language_pair,
                              std::string metric, std::span<const double> values);

// {"system":..,"lang_pair":..,"metric":..,"value":..,"n":..}, one line per score.
std::string system_scores_to_jsonl(std::span<const SystemScore> scores);
std::vector<SystemScore> parse_system_scores(std::istream& in);

}  // namespace bident
